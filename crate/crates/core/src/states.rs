//! GHZ-family target states, spin-flip operators on pure states, and
//! construction of training/test datasets from independently noised
//! copies of the same ideal target.
//!
//! A dataset file is plain text: one header line, then one line per
//! state in the order input/reference per training pair followed by
//! noisy/ideal per test state. Each state line is
//! `role,flips,re,im,re,im,...` where `flips` is the sampled number of
//! flipped qubits (empty when the noise carries no flip label).

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linops::{C64, CVector, StateVector};
use crate::noise::{sample_shot, NoiseSpec};
use crate::stream::{
    substream, TAG_PAIR_INPUT, TAG_PAIR_REFERENCE, TAG_TEST, TAG_TEST_PHASE,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// m-qubit GHZ state with phase φ: (|↑⟩^⊗m + e^{iφ}|↓⟩^⊗m)/√2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzSpec {
    num_qubits: usize,
    phase: f64,
}

impl GhzSpec {
    /// The phase is stored reduced into [0, 2π).
    pub fn new(num_qubits: usize, phase: f64) -> Result<Self> {
        if num_qubits < 2 {
            return Err(Error::InvalidParameter(format!(
                "GHZ state needs at least 2 qubits, got {num_qubits}"
            )));
        }
        let mut phase = phase.rem_euclid(TWO_PI);
        if phase >= TWO_PI {
            phase = 0.0;
        }
        Ok(Self { num_qubits, phase })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Subset J of flipped qubits, stored as a bitmask over qubits 0..m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipSubset {
    mask: usize,
    num_qubits: usize,
}

impl FlipSubset {
    pub fn from_mask(mask: usize, num_qubits: usize) -> Self {
        debug_assert!(mask < (1 << num_qubits));
        Self { mask, num_qubits }
    }

    pub fn from_indices(indices: &[usize], num_qubits: usize) -> Result<Self> {
        let mut mask = 0usize;
        for &q in indices {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
            mask |= 1 << q;
        }
        Ok(Self { mask, num_qubits })
    }

    pub fn empty(num_qubits: usize) -> Self {
        Self {
            mask: 0,
            num_qubits,
        }
    }

    pub fn mask(&self) -> usize {
        self.mask
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// |J|, the number of flipped qubits.
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit < self.num_qubits && (self.mask >> qubit) & 1 == 1
    }
}

/// Two independently noised realizations of the same ideal state; one
/// serves as network input, the other as reference output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: StateVector,
    pub reference: StateVector,
}

/// A noisy test state together with its known noiseless target and,
/// for flip-bearing noise, the sampled number of flipped qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTestState {
    pub noisy: StateVector,
    pub ideal: StateVector,
    pub flip_count: Option<usize>,
}

/// Builds the GHZ-φ state of `spec`.
pub fn ghz(spec: &GhzSpec) -> Result<StateVector> {
    let m = spec.num_qubits();
    let dim = 1usize << m;
    let mut amps = CVector::zeros(dim);
    let w = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(w, 0.0);
    amps[dim - 1] = Complex64::new(0.0, spec.phase()).exp() * w;
    Ok(StateVector::from_parts_unchecked(amps, m))
}

/// Applies σ^x to every qubit in `j`. A pure amplitude permutation, so
/// the norm is preserved exactly.
pub fn apply_flips(psi: &StateVector, j: &FlipSubset) -> Result<StateVector> {
    let m = psi.num_qubits();
    if j.num_qubits() != m {
        return Err(Error::DimensionMismatch(format!(
            "flip subset on {} qubits applied to state of {} qubits",
            j.num_qubits(),
            m
        )));
    }
    let mut big_mask = 0usize;
    for q in 0..m {
        if j.contains(q) {
            big_mask |= crate::linops::per_qubit_mask(q, m);
        }
    }
    let dim = 1usize << m;
    let mut out = CVector::zeros(dim);
    for i in 0..dim {
        out[i] = psi.amplitudes()[i ^ big_mask];
    }
    Ok(StateVector::from_parts_unchecked(out, m))
}

/// How the test states of a dataset are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum TestTargets {
    /// Fixed list of targets with per-target counts.
    Fixed(Vec<(GhzSpec, usize)>),
    /// `count` states, each with its own random phase drawn uniformly
    /// from the open interval (0, π).
    RandomPhases { num_qubits: usize, count: usize },
}

impl TestTargets {
    pub fn count(&self) -> usize {
        match self {
            TestTargets::Fixed(list) => list.iter().map(|(_, c)| c).sum(),
            TestTargets::RandomPhases { count, .. } => *count,
        }
    }
}

/// Full description of one dataset draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub train_targets: Vec<(GhzSpec, usize)>,
    pub test_targets: TestTargets,
    pub noise: NoiseSpec,
}

impl DatasetSpec {
    pub fn num_qubits(&self) -> Result<usize> {
        let m = match (self.train_targets.first(), &self.test_targets) {
            (Some((spec, _)), _) => spec.num_qubits(),
            (None, TestTargets::RandomPhases { num_qubits, .. }) => *num_qubits,
            (None, TestTargets::Fixed(list)) if !list.is_empty() => list[0].0.num_qubits(),
            _ => return Err(Error::EmptyData),
        };
        let consistent = self
            .train_targets
            .iter()
            .all(|(spec, _)| spec.num_qubits() == m)
            && match &self.test_targets {
                TestTargets::Fixed(list) => list.iter().all(|(spec, _)| spec.num_qubits() == m),
                TestTargets::RandomPhases { num_qubits, .. } => *num_qubits == m,
            };
        if !consistent {
            return Err(Error::DimensionMismatch(
                "dataset targets mix qubit counts".into(),
            ));
        }
        Ok(m)
    }
}

/// Draws a complete dataset. Every pair consists of two independent
/// noise shots on the same ideal target; every test state records its
/// ideal target and, under flip-bearing noise, the sampled |J|. All
/// randomness comes from `seed` through per-item substreams, so the
/// result is bit-for-bit reproducible and order-independent.
pub fn build_dataset(
    spec: &DatasetSpec,
    seed: u64,
) -> Result<(Vec<TrainingPair>, Vec<LabeledTestState>)> {
    if spec.train_targets.iter().any(|(_, count)| *count == 0) {
        return Err(Error::InvalidParameter(
            "per-target pair count must be at least 1".into(),
        ));
    }
    spec.num_qubits()?;

    let mut pairs = Vec::new();
    let mut index = 0u64;
    for (target, count) in &spec.train_targets {
        let ideal = ghz(target)?;
        for _ in 0..*count {
            let mut rng_in = substream(seed, TAG_PAIR_INPUT, index);
            let mut rng_ref = substream(seed, TAG_PAIR_REFERENCE, index);
            let (input, _) = sample_shot(&spec.noise, &ideal, &mut rng_in)?;
            let (reference, _) = sample_shot(&spec.noise, &ideal, &mut rng_ref)?;
            pairs.push(TrainingPair { input, reference });
            index += 1;
        }
    }

    let mut tests = Vec::new();
    let mut index = 0u64;
    let mut push_test = |target: &GhzSpec, index: u64| -> Result<()> {
        let ideal = ghz(target)?;
        let mut rng = substream(seed, TAG_TEST, index);
        let (noisy, flips) = sample_shot(&spec.noise, &ideal, &mut rng)?;
        tests.push(LabeledTestState {
            noisy,
            ideal,
            flip_count: flips.map(|j| j.len()),
        });
        Ok(())
    };
    match &spec.test_targets {
        TestTargets::Fixed(list) => {
            for (target, count) in list {
                for _ in 0..*count {
                    push_test(target, index)?;
                    index += 1;
                }
            }
        }
        TestTargets::RandomPhases { num_qubits, count } => {
            for _ in 0..*count {
                let mut rng = substream(seed, TAG_TEST_PHASE, index);
                let phase = loop {
                    let x: f64 = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::PI);
                    if x != 0.0 {
                        break x;
                    }
                };
                push_test(&GhzSpec::new(*num_qubits, phase)?, index)?;
                index += 1;
            }
        }
    }

    Ok((pairs, tests))
}

fn write_state_line<W: Write>(
    w: &mut W,
    role: &str,
    flips: Option<usize>,
    state: &StateVector,
) -> Result<()> {
    let flips = flips.map(|f| f.to_string()).unwrap_or_default();
    write!(w, "{role},{flips}")?;
    for a in state.amplitudes().iter() {
        write!(w, ",{},{}", a.re, a.im)?;
    }
    writeln!(w)?;
    Ok(())
}

/// Writes a dataset in the plain-text format described in the module
/// docs. `Display`-formatted floats round-trip exactly.
pub fn write_dataset<W: Write>(
    w: &mut W,
    num_qubits: usize,
    seed: u64,
    noise: &NoiseSpec,
    pairs: &[TrainingPair],
    tests: &[LabeledTestState],
) -> Result<()> {
    writeln!(
        w,
        "# qae dataset v1; m={}; seed={}; noise={}; pairs={}; tests={}",
        num_qubits,
        seed,
        noise,
        pairs.len(),
        tests.len()
    )?;
    for pair in pairs {
        write_state_line(w, "train_input", None, &pair.input)?;
        write_state_line(w, "train_reference", None, &pair.reference)?;
    }
    for test in tests {
        write_state_line(w, "test_noisy", test.flip_count, &test.noisy)?;
        write_state_line(w, "test_ideal", None, &test.ideal)?;
    }
    Ok(())
}

fn parse_state(fields: &[&str], line_no: usize) -> Result<StateVector> {
    let values: Vec<f64> = fields
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {line_no}: bad float {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if values.len() % 2 != 0 || !values.len().is_power_of_two() {
        return Err(Error::Parse(format!(
            "line {line_no}: {} numbers do not form 2^m re,im pairs",
            values.len()
        )));
    }
    let dim = values.len() / 2;
    let mut amps = CVector::zeros(dim);
    for i in 0..dim {
        amps[i] = C64::new(values[2 * i], values[2 * i + 1]);
    }
    StateVector::new(amps)
}

/// Reads a dataset written by [`write_dataset`]; returns the qubit
/// count from the header plus the reconstructed pairs and test states.
pub fn read_dataset<R: BufRead>(
    r: R,
) -> Result<(usize, Vec<TrainingPair>, Vec<LabeledTestState>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))??;
    if !header.starts_with("# qae dataset v1;") {
        return Err(Error::Parse(format!(
            "unrecognized dataset header: {header:?}"
        )));
    }
    let num_qubits: usize = header
        .split(';')
        .find_map(|part| part.trim().strip_prefix("m="))
        .ok_or_else(|| Error::Parse("dataset header lacks m=".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad qubit count in header: {e}")))?;

    let mut pairs = Vec::new();
    let mut tests = Vec::new();
    let mut pending_input: Option<StateVector> = None;
    let mut pending_noisy: Option<(StateVector, Option<usize>)> = None;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Parse(format!("line {line_no}: too few fields")));
        }
        let role = fields[0];
        let flips = if fields[1].is_empty() {
            None
        } else {
            Some(fields[1].parse::<usize>().map_err(|e| {
                Error::Parse(format!("line {line_no}: bad flip count: {e}"))
            })?)
        };
        let state = parse_state(&fields[2..], line_no)?;
        if state.num_qubits() != num_qubits {
            return Err(Error::Parse(format!(
                "line {line_no}: state has {} qubits, header says {}",
                state.num_qubits(),
                num_qubits
            )));
        }
        match role {
            "train_input" => pending_input = Some(state),
            "train_reference" => {
                let input = pending_input.take().ok_or_else(|| {
                    Error::Parse(format!("line {line_no}: reference without input"))
                })?;
                pairs.push(TrainingPair {
                    input,
                    reference: state,
                });
            }
            "test_noisy" => pending_noisy = Some((state, flips)),
            "test_ideal" => {
                let (noisy, flip_count) = pending_noisy.take().ok_or_else(|| {
                    Error::Parse(format!("line {line_no}: ideal without noisy state"))
                })?;
                tests.push(LabeledTestState {
                    noisy,
                    ideal: state,
                    flip_count,
                });
            }
            other => {
                return Err(Error::Parse(format!(
                    "line {line_no}: unknown role {other:?}"
                )));
            }
        }
    }
    if pending_input.is_some() || pending_noisy.is_some() {
        return Err(Error::Parse("dataset ends mid-record".into()));
    }
    Ok((num_qubits, pairs, tests))
}
