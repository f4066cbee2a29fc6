//! QPU side: executes request payloads on the statevector and keeps the
//! accounting.

use std::collections::HashSet;
use std::fmt::Write;

use rand_chacha::ChaCha20Rng;

use crate::backend::{StateVector, ZERO_TOLERANCE};
use crate::qir::{expand_compute, invert_flat, write_instr, Gate, GateKind, QInstr, Qubit, RegionId};
use crate::stdlib::Ancillas;

use super::{RunError, Stats};

/// One host request as seen by the controller.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceEntry {
    Instr(QInstr),
    /// A routine call with the body the controller expanded it to.
    Call { call: QInstr, body: Vec<QInstr> },
}

/// Text form of a request trace. Routine bodies are shown expanded, and a
/// released region lists the gates that uncompute it.
pub fn dump_trace(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    for t in trace {
        match t {
            TraceEntry::Instr(QInstr::Free { region, qubits, init }) => {
                for i in invert_flat(init).unwrap_or_default() {
                    write_instr(&mut out, &i, 0);
                }
                let bare = QInstr::Free {
                    region: *region,
                    qubits: qubits.clone(),
                    init: Vec::new(),
                };
                write_instr(&mut out, &bare, 0);
            }
            TraceEntry::Instr(i) => write_instr(&mut out, i, 0),
            TraceEntry::Call { call, body } => {
                write_instr(&mut out, call, 0);
                for i in expand_compute(body).unwrap_or_else(|_| body.clone()) {
                    write_instr(&mut out, &i, 1);
                }
                let _ = writeln!(out, "END");
            }
        }
    }
    out
}

pub struct Controller {
    pub state: StateVector,
    pub rng: ChaCha20Rng,
    pub stats: Stats,
    pub strict: bool,
    pub trace: Option<Vec<TraceEntry>>,
    pub overlaps: Vec<f64>,
    measured: HashSet<Qubit>,
    next_qubit: u32,
    next_region: u32,
    max_qubits: usize,
}

impl Ancillas for Controller {
    fn fresh(&mut self, width: usize) -> (RegionId, Vec<Qubit>) {
        let region = RegionId(self.next_region);
        self.next_region += 1;
        let qubits = (0..width as u32).map(|k| Qubit(self.next_qubit + k)).collect();
        self.next_qubit += width as u32;
        (region, qubits)
    }
}

impl Controller {
    pub fn new(max_qubits: usize, strict: bool, rng: ChaCha20Rng) -> Controller {
        Controller {
            state: StateVector::new(max_qubits),
            rng,
            stats: Stats::default(),
            strict,
            trace: None,
            overlaps: Vec::new(),
            measured: HashSet::new(),
            next_qubit: 0,
            next_region: 0,
            max_qubits,
        }
    }

    /// Fresh state and counters for a new shot; the random stream continues.
    pub fn reset_shot(&mut self, trace: bool) {
        self.state = StateVector::new(self.max_qubits);
        self.stats = Stats::default();
        self.trace = trace.then(Vec::new);
        self.overlaps.clear();
        self.measured.clear();
        self.next_qubit = 0;
        self.next_region = 0;
    }

    pub fn record(&mut self, entry: TraceEntry) {
        if let Some(t) = &mut self.trace {
            t.push(entry);
        }
    }

    /// Expands and applies a payload of unitary instructions.
    pub fn run(&mut self, seq: &[QInstr]) -> Result<(), RunError> {
        let flat = expand_compute(seq)?;
        self.run_flat(&flat)
    }

    pub fn run_flat(&mut self, flat: &[QInstr]) -> Result<(), RunError> {
        let applied = self.state.execute(flat, self.strict, &mut self.rng)?;
        self.stats.gates += applied as u64;
        Ok(())
    }

    pub fn measure(&mut self, qs: &[Qubit], reset: bool) -> Result<Vec<bool>, RunError> {
        let bits = self.state.measure(qs, &mut self.rng)?;
        self.stats.measurements += 1;
        if reset {
            self.correct(qs, &bits)?;
        }
        self.measured.extend(qs.iter().copied());
        Ok(bits)
    }

    /// Measures and flips back to |0…0⟩ without recording an outcome.
    pub fn reset(&mut self, qs: &[Qubit]) -> Result<(), RunError> {
        let bits = self.state.measure(qs, &mut self.rng)?;
        self.correct(qs, &bits)?;
        self.measured.extend(qs.iter().copied());
        Ok(())
    }

    fn correct(&mut self, qs: &[Qubit], bits: &[bool]) -> Result<(), RunError> {
        for (q, b) in qs.iter().zip(bits) {
            if *b {
                self.state.apply_gate(&Gate::one(GateKind::X, *q))?;
            }
        }
        Ok(())
    }

    /// Destroys a region: unmeasured regions are uncomputed through their
    /// initialiser, anything left over is traced out.
    pub fn free(&mut self, name: &str, region: RegionId, qubits: &[Qubit], init: &[QInstr]) -> Result<(), RunError> {
        let measured = qubits.iter().any(|q| self.measured.contains(q));
        for q in qubits {
            self.measured.remove(q);
        }
        if measured {
            self.record(TraceEntry::Instr(QInstr::Reset {
                targets: qubits.to_vec(),
            }));
            self.state.dealloc(qubits, false, &mut self.rng)?;
            return Ok(());
        }
        self.record(TraceEntry::Instr(QInstr::Free {
            region,
            qubits: qubits.to_vec(),
            init: init.to_vec(),
        }));
        let undo = invert_flat(init)?;
        self.run_flat(&undo)?;
        let overlap = self.state.overlap_zero(qubits)?;
        self.overlaps.push(overlap);
        if self.strict && overlap < 1.0 - ZERO_TOLERANCE {
            return Err(RunError::new(format!(
                "uncompute check failed for `{name}`: overlap with |0…0⟩ is {overlap:.12}"
            )));
        }
        self.state.dealloc(qubits, false, &mut self.rng)?;
        Ok(())
    }
}
