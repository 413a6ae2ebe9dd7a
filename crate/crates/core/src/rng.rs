//! Counter-based stream derivation.
//!
//! Every random quantity in a simulation is drawn from a stream addressed by
//! `(seed, packet, lane)`. The address is hashed into a 64-bit key that seeds
//! a xoshiro256++ generator, so a packet's fading and noise do not depend on
//! which worker simulates it or in what order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a stream address into a generator seed.
pub fn stream_key(seed: u64, packet: u64, lane: u64) -> u64 {
    let a = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let b = mix64(a ^ packet.wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix64(b ^ lane.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7).wrapping_add(0x2545_f491_4f6c_dd1d))
}

pub fn stream(seed: u64, packet: u64, lane: u64) -> SimRng {
    SimRng::seed_from_u64(stream_key(seed, packet, lane))
}

/// Logical stream roles inside one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Fading of the source → relay `l` link.
    SourceFade(usize),
    /// Fading of the relay `l` → destination link.
    DestFade(usize),
    /// Receiver noise at relay `l`.
    RelayNoise(usize),
    /// Receiver noise at the destination.
    DestNoise,
    /// Payload bits.
    Payload,
}

impl Lane {
    fn index(self) -> u64 {
        match self {
            Lane::SourceFade(l) => 4 * l as u64,
            Lane::DestFade(l) => 4 * l as u64 + 1,
            Lane::RelayNoise(l) => 4 * l as u64 + 2,
            Lane::DestNoise => u64::MAX - 1,
            Lane::Payload => u64::MAX,
        }
    }
}

/// Stream factory for a single packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketStreams {
    seed: u64,
    packet: u64,
}

impl PacketStreams {
    pub fn new(seed: u64, packet: u64) -> Self {
        Self { seed, packet }
    }

    pub fn packet(&self) -> u64 {
        self.packet
    }

    pub fn lane(&self, lane: Lane) -> SimRng {
        stream(self.seed, self.packet, lane.index())
    }
}
