//! Round-based message bus.
//!
//! Messages posted during a round become visible only when the round is
//! flushed. The bus enforces the link policy on every post and records one
//! [`Transmission`] per sender per round, which is what cost accounting reads.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::model::{DualVector, ModelVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Model(ModelVector),
    Dual(DualVector),
    /// Chain-construction signalling; carries no numeric state.
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub round: u64,
    pub sender: usize,
    pub receivers: Vec<usize>,
    pub payload: Payload,
}

/// One sender's use of the medium in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub round: u64,
    pub sender: usize,
    pub receivers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub round: u64,
    pub sender: usize,
    pub receiver: usize,
    pub payload: Arc<Payload>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkPolicy {
    /// Only chain neighbours may talk.
    Chain(Chain),
    /// `workers` workers and a server with id `workers`; workers may only
    /// reach the server, the server may reach anyone.
    Star { workers: usize },
    Unrestricted,
}

impl LinkPolicy {
    fn allows(&self, sender: usize, receiver: usize) -> bool {
        match self {
            LinkPolicy::Chain(chain) => chain.are_adjacent(sender, receiver),
            LinkPolicy::Star { workers } => {
                let server = *workers;
                (sender == server && receiver < server) || (sender < server && receiver == server)
            }
            LinkPolicy::Unrestricted => sender != receiver,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlushedRound {
    pub round: u64,
    pub deliveries: Vec<Delivery>,
    pub transmissions: Vec<Transmission>,
}

impl FlushedRound {
    /// Deliveries addressed to `receiver`, in posting order.
    pub fn inbox(&self, receiver: usize) -> impl Iterator<Item = &Delivery> + '_ {
        self.deliveries.iter().filter(move |d| d.receiver == receiver)
    }

    /// Model sent by `sender` to `receiver` this round, if any.
    pub fn model_from(&self, sender: usize, receiver: usize) -> Option<&ModelVector> {
        self.inbox(receiver).find_map(|d| match (&*d.payload, d.sender == sender) {
            (Payload::Model(m), true) => Some(m),
            _ => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Bus {
    round: u64,
    policy: LinkPolicy,
    queue: Vec<Message>,
    history: Option<Vec<FlushedRound>>,
}

impl Bus {
    pub fn new(policy: LinkPolicy) -> Self {
        Self { round: 0, policy, queue: Vec::new(), history: None }
    }

    /// Keeps every flushed round for later replay.
    pub fn with_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn policy(&self) -> &LinkPolicy {
        &self.policy
    }

    pub fn set_policy(&mut self, policy: LinkPolicy) {
        self.policy = policy;
    }

    pub fn history(&self) -> &[FlushedRound] {
        self.history.as_deref().unwrap_or(&[])
    }

    pub fn post(&mut self, message: Message) -> Result<()> {
        if message.round != self.round {
            return Err(Error::WrongRound { message: message.round, current: self.round });
        }
        if message.receivers.is_empty() {
            return Err(Error::NoReceivers(message.sender));
        }
        if let Some(&bad) = message.receivers.iter().find(|&&r| !self.policy.allows(message.sender, r)) {
            return Err(Error::LocalityViolation { sender: message.sender, receiver: bad });
        }
        self.queue.push(message);
        Ok(())
    }

    /// Convenience for posting into the current round.
    pub fn send(&mut self, sender: usize, receivers: Vec<usize>, payload: Payload) -> Result<()> {
        self.post(Message { round: self.round, sender, receivers, payload })
    }

    /// Delivers everything queued this round and advances the round counter.
    pub fn flush_round(&mut self) -> FlushedRound {
        let round = self.round;
        let mut deliveries = Vec::new();
        let mut transmissions: Vec<Transmission> = Vec::new();
        for msg in self.queue.drain(..) {
            let payload = Arc::new(msg.payload);
            for &r in &msg.receivers {
                deliveries.push(Delivery { round, sender: msg.sender, receiver: r, payload: Arc::clone(&payload) });
            }
            match transmissions.iter_mut().find(|t| t.sender == msg.sender) {
                Some(t) => {
                    for r in msg.receivers {
                        if !t.receivers.contains(&r) {
                            t.receivers.push(r);
                        }
                    }
                }
                None => transmissions.push(Transmission { round, sender: msg.sender, receivers: msg.receivers }),
            }
        }
        self.round += 1;
        let flushed = FlushedRound { round, deliveries, transmissions };
        if let Some(h) = self.history.as_mut() {
            h.push(flushed.clone());
        }
        flushed
    }
}
