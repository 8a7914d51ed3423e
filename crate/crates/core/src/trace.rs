//! Chain traces: time-ordered states plus per-iteration metadata.

use std::io::{self, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::state::State;

/// Per-iteration record attached to each transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMeta {
    pub accepted: bool,
    pub kernel_tag: &'static str,
    /// Kernel-specific index: temperature level, mode index, or WL bin.
    pub aux_index: Option<usize>,
}

impl StepMeta {
    pub fn new(accepted: bool, kernel_tag: &'static str) -> Self {
        StepMeta {
            accepted,
            kernel_tag,
            aux_index: None,
        }
    }

    pub fn with_aux(accepted: bool, kernel_tag: &'static str, aux: usize) -> Self {
        StepMeta {
            accepted,
            kernel_tag,
            aux_index: Some(aux),
        }
    }
}

/// Chain output: `states.len() == meta.len() + 1` since the initial state
/// carries no transition record.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub states: Vec<State>,
    pub meta: Vec<StepMeta>,
    /// Set when a kernel aborted the run; the trace holds all completed
    /// iterations up to the failure.
    pub failure: Option<String>,
}

impl Trace {
    pub fn with_capacity(n_iter: usize) -> Self {
        Trace {
            states: Vec::with_capacity(n_iter + 1),
            meta: Vec::with_capacity(n_iter),
            failure: None,
        }
    }

    /// Number of transitions recorded (states minus the initial one).
    pub fn n_iterations(&self) -> usize {
        self.meta.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.meta.is_empty() {
            return 0.0;
        }
        self.meta.iter().filter(|m| m.accepted).count() as f64 / self.meta.len() as f64
    }

    /// States from `burn_in` transitions onward.
    pub fn states_after(&self, burn_in: usize) -> &[State] {
        &self.states[burn_in.min(self.states.len() - 1)..]
    }

    /// Mean of the state coordinates over the whole trace.
    pub fn mean(&self) -> DVector<f64> {
        mean_of_states(&self.states)
    }

    /// Write the CSV representation:
    /// `iter,accepted,kernel_tag,aux_index,x_0..x_{d-1}`, one row per
    /// stored state (row 0 is the initial state). Binary coordinates are
    /// written as 0/1 integers.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.states.first().map_or(0, |s| s.coords().len());
        write!(w, "iter,accepted,kernel_tag,aux_index")?;
        for j in 0..d {
            write!(w, ",x_{j}")?;
        }
        writeln!(w)?;
        for (i, s) in self.states.iter().enumerate() {
            if i == 0 {
                write!(w, "0,1,init,")?;
            } else {
                let m = &self.meta[i - 1];
                write!(w, "{},{},{},", i, u8::from(m.accepted), m.kernel_tag)?;
                if let Some(aux) = m.aux_index {
                    write!(w, "{aux}")?;
                }
            }
            match s {
                State::Binary(bits) => {
                    for &b in bits {
                        write!(w, ",{b}")?;
                    }
                }
                _ => {
                    for v in s.coords() {
                        write!(w, ",{v}")?;
                    }
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Coordinate-wise mean of a slice of states.
pub fn mean_of_states(states: &[State]) -> DVector<f64> {
    assert!(!states.is_empty(), "mean of empty state list");
    let d = states[0].coords().len();
    let mut acc = DVector::zeros(d);
    for s in states {
        acc += DVector::from_vec(s.coords());
    }
    acc / states.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_one_row_per_state() {
        let mut trace = Trace::with_capacity(2);
        trace.states.push(State::continuous(&[0.5, -1.0]));
        trace.states.push(State::continuous(&[0.25, 0.0]));
        trace.states.push(State::continuous(&[0.125, 1.0]));
        trace.meta.push(StepMeta::new(true, "rwm"));
        trace.meta.push(StepMeta::with_aux(false, "rwm", 3));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "iter,accepted,kernel_tag,aux_index,x_0,x_1");
        assert_eq!(lines[1], "0,1,init,,0.5,-1");
        assert_eq!(lines[2], "1,1,rwm,,0.25,0");
        assert_eq!(lines[3], "2,0,rwm,3,0.125,1");
    }

    #[test]
    fn binary_states_written_as_bits() {
        let mut trace = Trace::with_capacity(1);
        trace.states.push(State::Binary(vec![0, 1, 1]));
        trace.states.push(State::Binary(vec![1, 1, 0]));
        trace.meta.push(StepMeta::new(true, "gibbs"));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0,1,init,,0,1,1"));
        assert!(text.contains("1,1,gibbs,,1,1,0"));
    }
}
