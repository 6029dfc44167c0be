use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Device {
    A,
    B,
}

impl Device {
    pub fn index(self) -> usize {
        match self {
            Device::A => 0,
            Device::B => 1,
        }
    }

    pub fn other(self) -> Device {
        match self {
            Device::A => Device::B,
            Device::B => Device::A,
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Device::A => "A",
            Device::B => "B",
        })
    }
}

impl FromStr for Device {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Device::A),
            "B" | "b" => Ok(Device::B),
            other => Err(format!("unknown device '{other}'")),
        }
    }
}

/// One device's (question, answer) history.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalTranscript(pub Vec<(u8, u8)>);

impl LocalTranscript {
    pub fn empty() -> Self {
        LocalTranscript(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extended(&self, question: u8, answer: u8) -> Self {
        let mut v = self.0.clone();
        v.push((question, answer));
        LocalTranscript(v)
    }

    pub fn prefix(&self, len: usize) -> Self {
        LocalTranscript(self.0[..len].to_vec())
    }

    /// Bit string `q1 a1 q2 a2 …`.
    pub fn bits(&self) -> String {
        self.0.iter().map(|(q, a)| format!("{q}{a}")).collect()
    }

    pub fn parse_bits(s: &str) -> Result<Self, String> {
        let b: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(format!("invalid transcript bit '{other}'")),
            })
            .collect::<Result<_, _>>()?;
        if b.len() % 2 != 0 {
            return Err("transcript bit string must have even length".into());
        }
        Ok(LocalTranscript(b.chunks(2).map(|p| (p[0], p[1])).collect()))
    }
}

/// Both devices' transcripts; either may be shorter when only one device
/// has played.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transcript {
    pub alice: LocalTranscript,
    pub bob: LocalTranscript,
}

impl Transcript {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn local(&self, d: Device) -> &LocalTranscript {
        match d {
            Device::A => &self.alice,
            Device::B => &self.bob,
        }
    }

    pub fn with_local(&self, d: Device, t: LocalTranscript) -> Self {
        let mut out = self.clone();
        match d {
            Device::A => out.alice = t,
            Device::B => out.bob = t,
        }
        out
    }

    /// Games won among those both devices have played.
    pub fn wins(&self) -> usize {
        self.alice
            .0
            .iter()
            .zip(&self.bob.0)
            .filter(|((a, x), (b, y))| (x ^ y) == (a & b))
            .count()
    }

    pub fn key(&self) -> String {
        format!("{}|{}", self.alice.bits(), self.bob.bits())
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Table key `D/j/transcript/question`, with `*` allowed as a transcript
/// wildcard.
pub fn reflection_key(d: Device, j: usize, h: &LocalTranscript, question: u8) -> String {
    format!("{d}/{j}/{}/{question}", h.bits())
}

pub fn wildcard_key(d: Device, j: usize, question: u8) -> String {
    format!("{d}/{j}/*/{question}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        let t = LocalTranscript::empty().extended(1, 0).extended(0, 1);
        assert_eq!(t.bits(), "1001");
        assert_eq!(LocalTranscript::parse_bits("1001").unwrap(), t);
        assert!(LocalTranscript::parse_bits("100").is_err());
    }

    #[test]
    fn counts_wins() {
        let t = Transcript {
            alice: LocalTranscript(vec![(1, 0), (0, 1)]),
            bob: LocalTranscript(vec![(1, 1), (1, 0)]),
        };
        // game 1: a·b = 1, x⊕y = 1 → win; game 2: a·b = 0, x⊕y = 1 → loss
        assert_eq!(t.wins(), 1);
    }

    #[test]
    fn key_format() {
        assert_eq!(
            reflection_key(Device::A, 1, &LocalTranscript::empty(), 0),
            "A/1//0"
        );
        assert_eq!(wildcard_key(Device::B, 3, 1), "B/3/*/1");
    }
}
