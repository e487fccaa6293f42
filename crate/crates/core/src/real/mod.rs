//! ε-agreement on exact rationals by reduction to edge agreement on ℤ:
//! scale by `2/ε`, round to the nearest integer (ties toward zero), agree,
//! then step at most ½ back toward the own scaled input and scale back.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::path::{agr_z, AgrZ, Exp, TwoStep};
use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RealError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(BigRational),
    #[error("cannot parse {0:?} as a rational")]
    Parse(String),
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

/// Nearest integer; exact halves go to the neighbor nearer zero.
pub fn round_ties_toward_zero(x: &BigRational) -> BigInt {
    let a = x.abs();
    let whole = a.floor();
    let r = if a - &whole > half() { whole.to_integer() + 1 } else { whole.to_integer() };
    if x.is_negative() {
        -r
    } else {
        r
    }
}

/// Moves from `y` toward `v` by at most ½.
pub fn unround(y: &BigInt, v: &BigRational) -> BigRational {
    let y = BigRational::from_integer(y.clone());
    if &y <= v {
        (y + half()).min(v.clone())
    } else {
        (y - half()).max(v.clone())
    }
}

/// `⌈2M/ε − ½⌉`, the largest integer magnitude handed to the inner protocol
/// when honest inputs have magnitude at most `m`.
pub fn inner_input_bound(m: &BigRational, eps: &BigRational) -> BigInt {
    (BigRational::from_integer(2.into()) * m / eps - half()).ceil().to_integer()
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.125"`.
pub fn parse_rational(s: &str) -> Result<BigRational, RealError> {
    let err = || RealError::Parse(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits_ok(int) || !digits_ok(frac) {
        return Err(err());
    }
    let mantissa: BigInt = format!("{int}{frac}").trim_start_matches('0').parse().unwrap_or_default();
    let x = BigRational::new(mantissa, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -x } else { x })
}

/// Decimal rendering truncated toward zero after `digits` places.
pub fn format_decimal(x: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10).pow(digits);
    let scaled = (x.abs() * BigRational::from_integer(scale.clone())).to_integer();
    let (int, frac) = scaled.div_rem(&scale);
    let sign = if x.is_negative() && !scaled.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0>width$}", width = digits as usize)
    }
}

/// ε-agreement in ℝ over an edge agreement protocol in ℤ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsilonAgreement<N> {
    eps: BigRational,
    inner: N,
    /// The own input scaled by `2/ε`.
    scaled: Option<BigRational>,
    out: Latch,
}

const INNER_INDEX: u64 = 0;

impl<N> EpsilonAgreement<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    pub fn new(eps: BigRational, inner: N) -> Result<Self, RealError> {
        if !eps.is_positive() {
            return Err(RealError::InvalidEpsilon(eps));
        }
        Ok(EpsilonAgreement { eps, inner, scaled: None, out: Latch::default() })
    }

    /// The integer the inner protocol receives for input `v`.
    pub fn inner_input(eps: &BigRational, v: &BigRational) -> BigInt {
        round_ties_toward_zero(&Self::scale(eps, v))
    }

    fn scale(eps: &BigRational, v: &BigRational) -> BigRational {
        v * BigRational::from_integer(2.into()) / eps
    }

    fn slot() -> TagComponent {
        TagComponent::new(N::KIND, INNER_INDEX)
    }

    fn inner_outputs(&mut self, ys: Vec<BigInt>, cx: &mut Context<'_, BigRational>) {
        let Some(scaled) = &self.scaled else { return };
        for y in ys {
            let back = unround(&y, scaled) * &self.eps / BigRational::from_integer(2.into());
            if self.out.fire() {
                cx.output(back);
            }
        }
    }
}

impl EpsilonAgreement<AgrZ<TwoStep<Exp>>> {
    /// Over the default integer protocol.
    pub fn standard(eps: BigRational) -> Result<Self, RealError> {
        EpsilonAgreement::new(eps, agr_z())
    }
}

impl<N> Automaton for EpsilonAgreement<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    type Input = BigRational;
    type Output = BigRational;
    const KIND: ProtocolKind = ProtocolKind::Epsilon;

    fn on_input(&mut self, v: BigRational, cx: &mut Context<'_, BigRational>) {
        if self.scaled.is_some() {
            return;
        }
        let scaled = Self::scale(&self.eps, &v);
        let x = round_ties_toward_zero(&scaled);
        self.scaled = Some(scaled);
        let inner = &mut self.inner;
        let rep = drive(cx, Self::slot(), |c| inner.on_input(x, c));
        self.inner_outputs(rep.outputs, cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, BigRational>) {
        match msg.for_child() {
            Some((comp, sub_msg)) if comp == Self::slot() => {
                let inner = &mut self.inner;
                let rep = drive(cx, comp, |c| inner.on_message(sub_msg, c));
                self.inner_outputs(rep.outputs, cx);
            }
            _ => cx.malformed(),
        }
    }
}

#[cfg(test)]
mod tests;
