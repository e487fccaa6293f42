//! Edge agreement on infinite integer paths: exponential search in ℕ, its
//! two-stage accelerator, and the sign-splitting extension to ℤ.

mod agr_z;
mod exp;
mod two_step;

pub use agr_z::AgrZ;
pub use exp::{Exp, Side, CENTER, LEFT, RIGHT};
pub use two_step::{decode_two_step, floor_log2_plus1, TwoStep, TwoStepDecode};

/// Edge agreement in ℕ by exponential search from level 0.
pub fn exp0() -> Exp {
    Exp::new(0)
}

/// The two-stage protocol over exponential search.
pub fn two_step_exp0() -> TwoStep<Exp> {
    TwoStep::new(exp0())
}

/// Edge agreement in ℤ over the two-stage protocol.
pub fn agr_z() -> AgrZ<TwoStep<Exp>> {
    AgrZ::new(two_step_exp0())
}

#[cfg(test)]
mod tests;
