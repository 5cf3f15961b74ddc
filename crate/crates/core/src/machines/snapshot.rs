//! Versioned little-endian machine snapshots.
//!
//! Layout: `TSTM` magic, `u16` format version, `u8` payload tag, `u8` scalar
//! width in bytes. Machine payloads continue with a fixed config block and
//! then every automaton state as a `u32`, clause-major and literal-minor.
//! Adapter payloads hold an output step and a list of length-prefixed
//! nested machine snapshots.

use super::{ClassicTsetlinMachine, MachineConfig, MachineKind, MulticlassTsetlinMachine, RegressionTsetlinMachine};
use crate::automata::TsetlinAutomaton;
use crate::clause::Clause;
use crate::error::{Result, TmError};
use crate::num::Scalar;

pub const MAGIC: &[u8; 4] = b"TSTM";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Ctm,
    Mtm,
    Rtm,
    BitwiseAdapter,
    MtmAdapter,
}

impl Payload {
    fn tag(self) -> u8 {
        match self {
            Payload::Ctm => 0,
            Payload::Mtm => 1,
            Payload::Rtm => 2,
            Payload::BitwiseAdapter => 3,
            Payload::MtmAdapter => 4,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        Ok(match t {
            0 => Payload::Ctm,
            1 => Payload::Mtm,
            2 => Payload::Rtm,
            3 => Payload::BitwiseAdapter,
            4 => Payload::MtmAdapter,
            _ => return Err(TmError::Snapshot(format!("unknown payload tag {t}"))),
        })
    }

    fn of_kind(kind: MachineKind) -> Self {
        match kind {
            MachineKind::Ctm => Payload::Ctm,
            MachineKind::Mtm => Payload::Mtm,
            MachineKind::Rtm => Payload::Rtm,
        }
    }
}

/// Binary round-trip for machines and adapters.
pub trait Snapshot: Sized {
    fn to_snapshot(&self) -> Vec<u8>;
    fn from_snapshot(bytes: &[u8]) -> Result<Self>;
}

pub(crate) struct Writer(Vec<u8>);

impl Writer {
    pub(crate) fn new<F: Scalar>(payload: Payload) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u16(FORMAT_VERSION);
        w.u8(payload.tag());
        w.u8(std::mem::size_of::<F>() as u8);
        w
    }

    pub(crate) fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    pub(crate) fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn usize32(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("count fits in u32"));
    }

    pub(crate) fn blob(&mut self, bytes: &[u8]) {
        self.u64(bytes.len() as u64);
        self.0.extend_from_slice(bytes);
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.0
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates the header and returns the reader with the payload tag.
    pub(crate) fn open(bytes: &'a [u8]) -> Result<(Self, Payload)> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(TmError::Snapshot("bad magic bytes".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(TmError::SnapshotVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let payload = Payload::from_tag(r.u8()?)?;
        let width = r.u8()?;
        if width != 4 && width != 8 {
            return Err(TmError::Snapshot(format!("unsupported scalar width {width}")));
        }
        Ok((r, payload))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(TmError::Snapshot(format!("truncated at byte {}", self.pos))),
        }
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn blob(&mut self) -> Result<&'a [u8]> {
        let n = usize::try_from(self.u64()?).map_err(|_| TmError::Snapshot("blob too large".into()))?;
        self.take(n)
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(TmError::Snapshot(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn encode<'c, F: Scalar>(
    config: &MachineConfig<F>,
    n_features: usize,
    clauses: impl Iterator<Item = &'c Clause>,
) -> Vec<u8> {
    let mut w = Writer::new::<F>(Payload::of_kind(config.kind));
    w.u8(config.kind.tag());
    w.usize32(n_features);
    w.usize32(config.clauses);
    w.u32(config.threshold);
    w.f64(config.specificity.to_f64_lossless());
    w.f64(config.gain.to_f64_lossless());
    w.usize32(config.n_classes);
    w.f64(config.y_max.to_f64_lossless());
    w.u32(config.n_states_per_action);
    w.u64(config.epochs as u64);
    w.u64(config.seed);
    w.u8(config.shuffle as u8);
    for c in clauses {
        for ta in c.automata() {
            w.u32(ta.state());
        }
    }
    w.finish()
}

fn decode<F: Scalar>(bytes: &[u8], expected: MachineKind) -> Result<(MachineConfig<F>, usize, Vec<Clause>)> {
    let (mut r, payload) = Reader::open(bytes)?;
    if payload != Payload::of_kind(expected) {
        return Err(TmError::Snapshot(format!("payload is {payload:?}, expected {expected:?}")));
    }
    let kind = MachineKind::from_tag(r.u8()?).ok_or_else(|| TmError::Snapshot("bad machine kind".into()))?;
    let n_features = r.u32()? as usize;
    let config = MachineConfig {
        kind,
        clauses: r.u32()? as usize,
        threshold: r.u32()?,
        specificity: F::from_f64_lossy(r.f64()?),
        gain: F::from_f64_lossy(r.f64()?),
        n_classes: r.u32()? as usize,
        y_max: F::from_f64_lossy(r.f64()?),
        n_states_per_action: r.u32()?,
        epochs: r.u64()? as usize,
        seed: r.u64()?,
        shuffle: r.u8()? != 0,
    };
    if n_features == 0 {
        return Err(TmError::Snapshot("zero feature width".into()));
    }
    let mut clauses = Vec::with_capacity(config.clauses.min(1 << 20));
    for _ in 0..config.clauses {
        let team = (0..2 * n_features)
            .map(|_| {
                let state = r.u32()?;
                TsetlinAutomaton::with_state(config.n_states_per_action, state)
                    .map_err(|e| TmError::Snapshot(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        clauses.push(Clause::from_automata(team)?);
    }
    r.finish()?;
    Ok((config, n_features, clauses))
}

impl<F: Scalar> Snapshot for ClassicTsetlinMachine<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        encode(self.config(), self.n_features(), self.clauses().iter())
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let (config, o, clauses) = decode(bytes, MachineKind::Ctm)?;
        Self::from_clauses(config, o, clauses)
    }
}

impl<F: Scalar> Snapshot for MulticlassTsetlinMachine<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        encode(self.config(), self.n_features(), self.clauses())
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let (config, o, clauses) = decode(bytes, MachineKind::Mtm)?;
        Self::from_clauses(config, o, clauses)
    }
}

impl<F: Scalar> Snapshot for RegressionTsetlinMachine<F> {
    fn to_snapshot(&self) -> Vec<u8> {
        use super::Regressor;
        encode(self.config(), self.n_features(), self.clauses().iter())
    }

    fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let (config, o, clauses) = decode(bytes, MachineKind::Rtm)?;
        Self::from_clauses(config, o, clauses)
    }
}

/// Reads only the payload tag of a snapshot.
pub fn peek_payload(bytes: &[u8]) -> Result<Payload> {
    Reader::open(bytes).map(|(_, p)| p)
}
