//! Classical messages between the referee and the two devices.
//!
//! The referee holds one link per device and nothing else; the devices run
//! on their own threads and share only the [`Lab`]. There is no channel
//! between the devices. The referee waits for each reply before sending the
//! next question, so a seeded session is reproducible.

use std::io::Write;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::lab::{Lab, MeasurementBasis, Side};
use super::{Result, TomographyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    EveToAlice,
    AliceToEve,
    EveToBob,
    BobToEve,
}

impl Direction {
    pub fn to(side: Side) -> Self {
        match side {
            Side::Alice => Direction::EveToAlice,
            Side::Bob => Direction::EveToBob,
        }
    }

    pub fn from(side: Side) -> Self {
        match side {
            Side::Alice => Direction::AliceToEve,
            Side::Bob => Direction::BobToEve,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    /// CHSH question bit for the EPR pair numbered by the round.
    Question(u8),
    Answer(u8),
    /// Measure consecutive blocks of these qubits in the resource basis.
    Permutation(Vec<usize>),
    /// One basis index per block.
    Reports(Vec<u16>),
    /// Bell-measure the two qubits, first one carrying the Pauli.
    BellRequest(usize, usize),
    /// `2x + z` for the Bell state `(X^x Z^z ⊗ I)|φ⟩`.
    BellOutcome(u8),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub direction: Direction,
    pub round: usize,
    pub payload: Payload,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub entries: Vec<LogEntry>,
}

impl SessionLog {
    pub fn push(&mut self, direction: Direction, round: usize, payload: Payload) {
        self.entries.push(LogEntry {
            direction,
            round,
            payload,
        });
    }

    /// Everything one device received, in order.
    pub fn view_of(&self, side: Side) -> Vec<&LogEntry> {
        let d = Direction::to(side);
        self.entries.iter().filter(|e| e.direction == d).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> serde_json::Result<Self> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<serde_json::Result<_>>()?;
        Ok(SessionLog { entries })
    }
}

/// A device's only access to the physics: measuring its own qubits.
pub struct Hands {
    side: Side,
    lab: Arc<Mutex<Lab>>,
}

impl Hands {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn measure(&self, qubits: &[usize], basis: &MeasurementBasis) -> Result<usize> {
        self.lab
            .lock()
            .expect("lab lock")
            .measure(self.side, qubits, basis)
    }
}

pub trait Device: Send {
    fn respond(&mut self, round: usize, payload: &Payload, hands: &Hands) -> Result<Payload>;
}

type Request = (usize, Payload);
type Reply = std::result::Result<Payload, String>;

pub struct Link {
    side: Side,
    tx: Sender<Option<Request>>,
    rx: Receiver<Reply>,
}

/// The referee's end of both links plus the running transcript.
pub struct Wire {
    alice: Link,
    bob: Link,
    pub log: SessionLog,
}

impl Wire {
    pub fn ask(&mut self, side: Side, round: usize, payload: Payload) -> Result<Payload> {
        let link = match side {
            Side::Alice => &self.alice,
            Side::Bob => &self.bob,
        };
        self.log.push(Direction::to(side), round, payload.clone());
        link.tx
            .send(Some((round, payload)))
            .map_err(|_| TomographyError::Disconnected(link.side))?;
        let reply = link
            .rx
            .recv()
            .map_err(|_| TomographyError::Disconnected(link.side))?;
        let reply = reply.map_err(|e| TomographyError::Device(link.side, e))?;
        self.log.push(Direction::from(side), round, reply.clone());
        Ok(reply)
    }
}

fn serve(device: &mut dyn Device, hands: Hands, rx: Receiver<Option<Request>>, tx: Sender<Reply>) {
    while let Ok(Some((round, payload))) = rx.recv() {
        let reply = device
            .respond(round, &payload, &hands)
            .map_err(|e| e.to_string());
        let failed = reply.is_err();
        if tx.send(reply).is_err() || failed {
            return;
        }
    }
}

fn link(side: Side) -> (Link, (Receiver<Option<Request>>, Sender<Reply>)) {
    let (qtx, qrx) = channel();
    let (atx, arx) = channel();
    (
        Link {
            side,
            tx: qtx,
            rx: arx,
        },
        (qrx, atx),
    )
}

/// Run `body` as the referee with both devices serving on their own threads.
pub fn with_devices<R>(
    lab: Arc<Mutex<Lab>>,
    alice: &mut dyn Device,
    bob: &mut dyn Device,
    body: impl FnOnce(&mut Wire) -> Result<R>,
) -> Result<(R, SessionLog)> {
    let (alice_link, alice_end) = link(Side::Alice);
    let (bob_link, bob_end) = link(Side::Bob);
    let hands = |side| Hands {
        side,
        lab: Arc::clone(&lab),
    };
    let (alice_hands, bob_hands) = (hands(Side::Alice), hands(Side::Bob));
    std::thread::scope(|scope| {
        scope.spawn(move || serve(alice, alice_hands, alice_end.0, alice_end.1));
        scope.spawn(move || serve(bob, bob_hands, bob_end.0, bob_end.1));
        let (alice, bob) = (alice_link, bob_link);
        let mut wire = Wire {
            alice,
            bob,
            log: SessionLog::default(),
        };
        let out = body(&mut wire);
        let _ = wire.alice.tx.send(None);
        let _ = wire.bob.tx.send(None);
        out.map(|r| (r, wire.log))
    })
}
