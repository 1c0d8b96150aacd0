use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ProtocolFamily, ProtocolSpec};
use crate::channel::{Channel, SamplingMode};
use crate::error::{Error, Result};
use crate::transport::{Message, MessageKind, Party, Transport};

/// One protocol round as seen by both parties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    /// Index into the spec's preparation table.
    pub prep: usize,
    pub alice_group: usize,
    pub bob_context: usize,
    /// Outcome index within Bob's context, `None` for no click.
    pub outcome: Option<usize>,
    pub sifted: bool,
    /// (Alice, Bob) key symbols, present exactly when sifted.
    pub key: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub family: ProtocolFamily,
    pub dim: usize,
    pub seed: u64,
    pub channel: String,
    pub rounds: Vec<RoundRecord>,
    /// Every message in delivery order.
    pub messages: Vec<Message>,
}

impl SessionTranscript {
    pub fn n_sifted(&self) -> usize {
        self.rounds.iter().filter(|r| r.sifted).count()
    }

    pub fn sifted_fraction(&self) -> f64 {
        if self.rounds.is_empty() {
            0.0
        } else {
            self.n_sifted() as f64 / self.rounds.len() as f64
        }
    }

    /// Header line, then one line per round:
    /// `round=<n> prep=<label> ctx=<id> outcome=<label|none> sifted=<0|1> key=<a>,<b>|-`.
    pub fn export(&self, spec: &ProtocolSpec) -> String {
        let mut out = format!(
            "# protocol={} dim={} seed={} channel={} rounds={}\n",
            self.family,
            self.dim,
            self.seed,
            self.channel,
            self.rounds.len()
        );
        for r in &self.rounds {
            let ctx = &spec.contexts()[r.bob_context];
            let outcome = r.outcome.map_or("none", |o| ctx.labels()[o].as_str());
            let key = r.key.map_or("-".to_string(), |(a, b)| format!("{a},{b}"));
            let _ = writeln!(
                out,
                "round={} prep={} ctx={} outcome={} sifted={} key={}",
                r.round,
                spec.preparations()[r.prep].label,
                ctx.id(),
                outcome,
                u8::from(r.sifted),
                key
            );
        }
        out
    }

    /// Every delivered message in wire format.
    pub fn message_log(&self) -> String {
        self.messages.iter().map(crate::transport::encode).collect()
    }
}

fn announce_kind(spec: &ProtocolSpec) -> MessageKind {
    if spec.family() == ProtocolFamily::Chau15 {
        MessageKind::PairAnnounce
    } else {
        MessageKind::BasisAnnounce
    }
}

/// Payload naming context/group `g`: the pair (i, j) for Chau15, else `g`.
fn group_payload(spec: &ProtocolSpec, g: usize) -> Vec<u64> {
    if spec.family() == ProtocolFamily::Chau15 {
        spec.contexts()[g]
            .id()
            .split('-')
            .map(|v| v.parse().expect("pair ids are numeric"))
            .collect()
    } else {
        vec![g as u64]
    }
}

fn group_from_payload(spec: &ProtocolSpec, payload: &[u64]) -> Option<usize> {
    if spec.family() == ProtocolFamily::Chau15 {
        match payload {
            [i, j, ..] => spec.contexts().iter().position(|c| c.id() == format!("{i}-{j}")),
            _ => None,
        }
    } else {
        payload
            .first()
            .map(|&g| g as usize)
            .filter(|&g| g < spec.n_groups())
    }
}

fn expect(m: Message, from: Party, kind: MessageKind, round: u64) -> Result<Message> {
    if m.sender != from || m.kind != kind || m.round != round {
        return Err(Error::Transport {
            round,
            message: format!("unexpected message `{m}`"),
        });
    }
    Ok(m)
}

/// Runs `n_rounds` seeded rounds. Per round Alice picks a preparation group
/// then a member uniformly, the state passes through `ch`, Bob picks a
/// context uniformly and samples an outcome by the Born rule. Alice and Bob
/// then exchange announcements and the sift decision over the transports.
pub fn run_session(
    spec: &ProtocolSpec,
    ch: &Channel,
    n_rounds: u64,
    seed: u64,
    alice: &mut dyn Transport,
    bob: &mut dyn Transport,
) -> Result<SessionTranscript> {
    if n_rounds == 0 {
        return Err(Error::InvalidParameter("n_rounds must be positive".into()));
    }
    // outcome probabilities for every (preparation, context)
    let table = spec.detection_matrix(ch, SamplingMode::Analytic)?;
    let members: Vec<Vec<usize>> = (0..spec.n_groups())
        .map(|g| spec.group_members(g).map(|(i, _)| i).collect())
        .collect();
    let kind = announce_kind(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(n_rounds as usize);
    let mut messages = Vec::with_capacity(3 * n_rounds as usize + 1);

    for round in 0..n_rounds {
        let wrap = |e: Error| match e {
            Error::Transport { .. } => e,
            other => Error::Transport {
                round,
                message: other.to_string(),
            },
        };
        let g = rng.gen_range(0..spec.n_groups());
        let prep = members[g][rng.gen_range(0..members[g].len())];
        let k = rng.gen_range(0..spec.n_groups());
        let probs = table.context_entries(prep, k);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = None;
        for (o, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = Some(o);
                break;
            }
        }
        let clicked = outcome.is_some();

        alice
            .send(Message::new(round, Party::Alice, kind, group_payload(spec, g)))
            .map_err(wrap)?;
        let m = expect(bob.receive().map_err(wrap)?, Party::Alice, kind, round)?;
        let alice_group_seen = group_from_payload(spec, &m.payload);
        messages.push(m);

        let mut payload = group_payload(spec, k);
        payload.push(u64::from(clicked));
        bob.send(Message::new(round, Party::Bob, kind, payload)).map_err(wrap)?;
        let m = expect(alice.receive().map_err(wrap)?, Party::Bob, kind, round)?;
        let bob_context_seen = group_from_payload(spec, &m.payload);
        let bob_clicked = m.payload.last() == Some(&1);
        messages.push(m);

        let (Some(ag), Some(bk)) = (alice_group_seen, bob_context_seen) else {
            return Err(Error::Transport {
                round,
                message: "announcement names no known context".into(),
            });
        };
        let keep = spec.sift_decision(g, bk, bob_clicked);
        alice
            .send(Message::new(round, Party::Alice, MessageKind::SiftDecision, vec![u64::from(keep)]))
            .map_err(wrap)?;
        let m = expect(bob.receive().map_err(wrap)?, Party::Alice, MessageKind::SiftDecision, round)?;
        let bob_keeps = m.payload == [1];
        messages.push(m);
        if bob_keeps != spec.sift_decision(ag, k, clicked) {
            return Err(Error::Transport {
                round,
                message: "parties disagree on the sift decision".into(),
            });
        }

        let key = match (keep, outcome) {
            (true, Some(o)) => Some((spec.preparations()[prep].symbol, o)),
            _ => None,
        };
        rounds.push(RoundRecord {
            round,
            prep,
            alice_group: g,
            bob_context: k,
            outcome,
            sifted: keep,
            key,
        });
    }
    alice
        .send(Message::new(n_rounds, Party::Alice, MessageKind::SessionEnd, vec![n_rounds]))
        .map_err(|e| Error::Transport {
            round: n_rounds,
            message: e.to_string(),
        })?;
    let end = bob.receive().map_err(|e| Error::Transport {
        round: n_rounds,
        message: e.to_string(),
    })?;
    messages.push(expect(end, Party::Alice, MessageKind::SessionEnd, n_rounds)?);

    Ok(SessionTranscript {
        family: spec.family(),
        dim: spec.dim(),
        seed,
        channel: ch.label().to_string(),
        rounds,
        messages,
    })
}

/// The kept rounds, with key symbols.
pub fn sift(spec: &ProtocolSpec, rounds: &[RoundRecord]) -> Vec<RoundRecord> {
    rounds
        .iter()
        .filter(|r| spec.sift_decision(r.alice_group, r.bob_context, r.outcome.is_some()))
        .map(|r| {
            let mut r = r.clone();
            r.sifted = true;
            r.key = r.outcome.map(|o| (spec.preparations()[r.prep].symbol, o));
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::identity_channel;
    use crate::transport::inproc_pair;

    fn session(fam: ProtocolFamily, d: usize, n: u64, seed: u64) -> (ProtocolSpec, SessionTranscript) {
        let spec = ProtocolSpec::new(fam, d).unwrap();
        let (mut a, mut b) = inproc_pair();
        let t = run_session(&spec, &identity_channel(d).unwrap(), n, seed, &mut a, &mut b).unwrap();
        (spec, t)
    }

    #[test]
    fn identity_bb84_has_no_errors() {
        let (spec, t) = session(ProtocolFamily::Bb84, 2, 10_000, 1);
        let kept = sift(&spec, &t.rounds);
        assert_eq!(kept.len(), t.n_sifted());
        assert!(kept.iter().all(|r| matches!(r.key, Some((a, b)) if a == b)));
    }

    #[test]
    fn sifted_rounds_carry_keys() {
        for (fam, d) in [(ProtocolFamily::Chau15, 4), (ProtocolFamily::Singapore, 2), (ProtocolFamily::MubFull, 4)] {
            let (_, t) = session(fam, d, 2000, 3);
            for r in &t.rounds {
                assert_eq!(r.sifted, r.key.is_some());
            }
            assert_eq!(t.messages.len(), 3 * 2000 + 1);
        }
    }

    #[test]
    fn determinism() {
        let (spec, a) = session(ProtocolFamily::Chau15, 8, 3000, 42);
        let (_, b) = session(ProtocolFamily::Chau15, 8, 3000, 42);
        assert_eq!(a, b);
        assert_eq!(a.export(&spec), b.export(&spec));
        let (_, c) = session(ProtocolFamily::Chau15, 8, 3000, 43);
        assert_ne!(a.rounds, c.rounds);
    }

    #[test]
    fn zero_rounds_rejected() {
        let spec = ProtocolSpec::new(ProtocolFamily::Bb84, 2).unwrap();
        let (mut a, mut b) = inproc_pair();
        assert!(run_session(&spec, &identity_channel(2).unwrap(), 0, 0, &mut a, &mut b).is_err());
    }

    #[test]
    fn closed_transport_reports_round() {
        let spec = ProtocolSpec::new(ProtocolFamily::Bb84, 2).unwrap();
        let (mut a, b) = inproc_pair();
        let (_, mut other) = inproc_pair();
        drop(b);
        let err = run_session(&spec, &identity_channel(2).unwrap(), 5, 0, &mut a, &mut other).unwrap_err();
        assert!(matches!(err, Error::Transport { round: 0, .. }), "{err}");
    }
}
