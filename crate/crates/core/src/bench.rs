//! Wall-clock comparison of sequential and pipelined execution on a chain
//! of sleeping identity stages.

use std::time::Instant;

use crate::builtins::Params;
use crate::error::{Error, Result};
use crate::exec::ExecConfig;
use crate::model::ThreadSpec;
use crate::program::{run_program, BodySpec, Mode, Program};
use crate::value::{TypeDesc, Value};
use crate::word::Word;

pub const CSV_HEADER: &str = "mode,stages,list_len,delay_ms,wall_ms";
pub const REPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub stages: usize,
    pub list_len: usize,
    pub delay_ms: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: Mode,
    pub stages: usize,
    pub list_len: usize,
    pub delay_ms: u64,
    /// Median over [`REPS`] runs.
    pub wall_ms: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{:.3}", self.mode, self.stages, self.list_len, self.delay_ms, self.wall_ms)
    }
}

/// `stages` chained `delay_identity_ms` threads over the input `0..list_len`.
pub fn bench_program(stages: usize, list_len: usize, delay_ms: u64) -> Result<Program> {
    let threads = (1..=stages as u64)
        .map(|id| ThreadSpec::new(id, "delay_identity_ms", Params::default().with_ms(delay_ms).with_type(TypeDesc::Int), Value::Unit))
        .collect::<Result<Vec<_>>>()?;
    let input = Value::ints(0..list_len as i64);
    Program::new(threads, BodySpec::Word(Word::new(1..=stages as u64)), input, TypeDesc::Int)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// One row per mode (seq, then pipeline).
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.stages == 0 || cfg.list_len == 0 || cfg.delay_ms == 0 {
        return Err(Error::schema("bench", "stages, list-len and delay-ms must be positive"));
    }
    let p = bench_program(cfg.stages, cfg.list_len, cfg.delay_ms)?;
    let exec = ExecConfig::with_workers(cfg.workers);
    let mut rows = Vec::new();
    for mode in [Mode::Seq, Mode::Pipeline] {
        let mut times = Vec::with_capacity(REPS);
        for _ in 0..REPS {
            let start = Instant::now();
            let out = run_program(&p, mode, &exec)?;
            times.push(start.elapsed().as_secs_f64() * 1000.0);
            if out.output != p.input {
                return Err(Error::type_mismatch("bench output", "the input list", format!("{:?}", out.output)));
            }
        }
        rows.push(BenchRow {
            mode,
            stages: cfg.stages,
            list_len: cfg.list_len,
            delay_ms: cfg.delay_ms,
            wall_ms: median(times),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench_has_expected_shape() {
        let rows = run_bench(&BenchConfig { stages: 2, list_len: 3, delay_ms: 1, workers: 2 }).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mode, Mode::Seq);
        assert!(rows[0].wall_ms >= 6.0);
        assert!(rows[1].csv().starts_with("pipeline,2,3,1,"));
    }

    #[test]
    fn zero_sizes_are_rejected() {
        assert!(run_bench(&BenchConfig { stages: 0, list_len: 3, delay_ms: 1, workers: 2 }).is_err());
    }

    #[test]
    fn median_of_odd_count() {
        assert_eq!(median(vec![5.0, 1.0, 3.0]), 3.0);
    }
}
