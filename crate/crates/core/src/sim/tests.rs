use super::*;

/// Multicasts its input once and outputs on its own echo.
#[derive(Clone, Debug)]
struct EchoOnce {
    latch: Latch,
}

impl Automaton for EchoOnce {
    type Input = u8;
    type Output = u8;
    const KIND: ProtocolKind = ProtocolKind::Echo;

    fn on_input(&mut self, input: u8, cx: &mut Context<'_, u8>) {
        cx.multicast(1, vec![input]);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, u8>) {
        if msg.from == cx.me() && self.latch.fire() {
            cx.output(msg.payload[0]);
        }
    }
}

struct Fixed(VTime);

impl Adversary for Fixed {
    fn name(&self) -> &str {
        "fixed"
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], _net: &mut NetControl) -> Vec<Option<VTime>> {
        vec![Some(self.0); batch.len()]
    }
}

fn t(n: i64) -> VTime {
    VTime::from_integer(n)
}

#[test]
fn echo_round_is_one() {
    let cfg = SimConfig::new(4, 0, 0).with_trace();
    let out = run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(7); 4], &mut Fixed(t(1)))
        .unwrap();
    for p in 0..4 {
        assert_eq!(out.outputs[p], Some((t(1), 7)));
    }
    assert_eq!(measure_rounds(&out).unwrap(), t(1));
    assert_eq!(out.metrics.messages_total, 16);
    assert_eq!(out.metrics.per_party_multicasts, vec![1; 4]);
    // depth-1 tag, kind byte and one payload byte
    assert_eq!(out.metrics.bits_total, 16 * 40);
}

#[test]
fn rounds_formula_examples() {
    assert_eq!(rounds_formula(Some(t(0)), t(6), t(1)), t(6));
    assert_eq!(rounds_formula(Some(t(0)), VTime::new(11, 2), t(1)), VTime::new(11, 2));
    assert_eq!(rounds_formula(Some(t(3)), t(2), t(1)), t(0));
}

#[test]
fn missing_output_is_not_quiescent() {
    let mut cfg = SimConfig::new(4, 1, 0);
    cfg.input_times[2] = None;
    let out =
        run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(1); 4], &mut Fixed(t(2))).unwrap();
    assert_eq!(measure_rounds(&out), Err(NotQuiescent(PartyId(2))));
}

#[test]
fn rejects_too_many_faults() {
    let cfg = SimConfig::new(3, 1, 0);
    let err = run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(1); 3], &mut Fixed(t(1)));
    assert!(matches!(err, Err(SimError::InvalidConfig(_))));
}

#[test]
fn event_budget_is_enforced() {
    let mut cfg = SimConfig::new(4, 0, 0);
    cfg.event_budget = 5;
    let err = run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(1); 4], &mut Fixed(t(1)));
    assert!(matches!(err, Err(SimError::EventBudgetExceeded(5))));
}

/// Drops every envelope, which is only legal for corrupted senders.
struct Dropper;

impl Adversary for Dropper {
    fn name(&self) -> &str {
        "dropper"
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], _net: &mut NetControl) -> Vec<Option<VTime>> {
        vec![None; batch.len()]
    }
}

#[test]
fn dropping_honest_messages_is_rejected() {
    let cfg = SimConfig::new(4, 1, 0);
    let err = run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(1); 4], &mut Dropper);
    assert!(matches!(err, Err(SimError::Adversary { err: NetError::Forgery(_), .. })));
}

/// Corrupts party 0 during its multicast and delivers only to party 1.
struct Interceptor;

impl Adversary for Interceptor {
    fn name(&self) -> &str {
        "interceptor"
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], net: &mut NetControl) -> Vec<Option<VTime>> {
        if batch[0].sender == PartyId(0) {
            net.corrupt(PartyId(0)).unwrap();
            return batch.iter().map(|e| (e.receiver == PartyId(1)).then(|| t(1))).collect();
        }
        vec![Some(t(1)); batch.len()]
    }
}

#[test]
fn mid_multicast_corruption_reaches_a_subset() {
    let cfg = SimConfig::new(4, 1, 0).with_trace();
    let out =
        run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(1); 4], &mut Interceptor).unwrap();
    assert!(!out.honest[0]);
    let sent = out.sent.as_ref().unwrap();
    let from0: Vec<_> = sent.iter().filter(|e| e.sender == PartyId(0)).collect();
    assert_eq!(from0.len(), 4);
    assert_eq!(from0.iter().filter(|e| e.deliver_time.is_some()).count(), 1);
    assert!(from0.iter().all(|e| !e.honest));
    assert_eq!(out.metrics.per_party_messages[0], 0);
    let lines = out.trace_json_lines();
    assert!(lines.lines().any(|l| l.contains("\"event\":\"corrupt\"")));
}

#[test]
fn reruns_are_identical() {
    let run = || {
        let cfg = SimConfig::new(4, 0, 9).with_trace();
        run_simulation(&cfg, |_| EchoOnce { latch: Latch::default() }, vec![Some(3); 4], &mut Fixed(VTime::new(3, 2)))
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.trace_json_lines(), b.trace_json_lines());
    assert_eq!(a.metrics, b.metrics);
}
