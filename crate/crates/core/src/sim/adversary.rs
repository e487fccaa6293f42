//! The interface between the kernel and adversary strategies.

use super::party::PartyId;
use super::tag::InstanceTag;
use super::VTime;

/// Read-only view of one envelope as the adversary sees it.
#[derive(Clone, Debug)]
pub struct EnvelopeView<'a> {
    pub sender: PartyId,
    pub receiver: PartyId,
    pub tag: &'a InstanceTag,
    pub kind: u8,
    pub payload: &'a [u8],
    pub send_time: VTime,
}

/// A byzantine message queued by the adversary.
#[derive(Clone, Debug)]
pub struct Injection {
    pub from: PartyId,
    pub to: PartyId,
    pub tag: InstanceTag,
    pub kind: u8,
    pub payload: Vec<u8>,
    pub delay: VTime,
}

/// Errors raised when a strategy oversteps the model.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("corruption budget t = {t} exhausted")]
    BudgetExhausted { t: usize },
    #[error("party {0} is honest; the adversary cannot send on its behalf")]
    Forgery(PartyId),
    #[error("party {0} out of range")]
    NoSuchParty(PartyId),
    #[error("delays must be positive")]
    NonPositiveDelay,
}

/// Capabilities the kernel grants an adversary during a callback.
pub struct NetControl {
    pub(crate) n: usize,
    pub(crate) t: usize,
    pub(crate) now: VTime,
    pub(crate) corrupted: Vec<bool>,
    pub(crate) newly_corrupted: Vec<PartyId>,
    pub(crate) injections: Vec<Injection>,
}

impl NetControl {
    pub(crate) fn new(n: usize, t: usize) -> Self {
        NetControl {
            n,
            t,
            now: VTime::from_integer(0),
            corrupted: vec![false; n],
            newly_corrupted: Vec::new(),
            injections: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn now(&self) -> VTime {
        self.now
    }

    pub fn is_corrupted(&self, p: PartyId) -> bool {
        self.corrupted.get(p.index()).copied().unwrap_or(false)
    }

    pub fn corrupted(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.corrupted.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| PartyId(i as u32))
    }

    pub fn corrupted_count(&self) -> usize {
        self.corrupted.iter().filter(|&&c| c).count()
    }

    /// Corrupts `p`. Corrupting an already corrupted party is a no-op.
    pub fn corrupt(&mut self, p: PartyId) -> Result<(), NetError> {
        if p.index() >= self.n {
            return Err(NetError::NoSuchParty(p));
        }
        if self.corrupted[p.index()] {
            return Ok(());
        }
        if self.corrupted_count() >= self.t {
            return Err(NetError::BudgetExhausted { t: self.t });
        }
        self.corrupted[p.index()] = true;
        self.newly_corrupted.push(p);
        Ok(())
    }

    /// Queues a message from a corrupted party.
    pub fn inject(&mut self, inj: Injection) -> Result<(), NetError> {
        if inj.to.index() >= self.n {
            return Err(NetError::NoSuchParty(inj.to));
        }
        if !self.is_corrupted(inj.from) {
            return Err(NetError::Forgery(inj.from));
        }
        if inj.delay <= VTime::from_integer(0) {
            return Err(NetError::NonPositiveDelay);
        }
        self.injections.push(inj);
        Ok(())
    }
}

/// An adversary strategy: scheduling, corruption and byzantine behaviour.
pub trait Adversary {
    fn name(&self) -> &str;

    /// Called once before any input arrives.
    fn start(&mut self, _net: &mut NetControl) {}

    /// Decides the fate of one honest send (a multicast or a single message).
    ///
    /// Returns one entry per envelope: `Some(delay)` delivers it after a
    /// positive delay, `None` drops it. Dropping is only legal if the sender
    /// is corrupted during this call, which models corruption mid-multicast.
    fn schedule(&mut self, batch: &[EnvelopeView<'_>], net: &mut NetControl) -> Vec<Option<VTime>>;

    /// Called when an honest party acquires its input.
    fn on_input(&mut self, _party: PartyId, _net: &mut NetControl) {}
}
