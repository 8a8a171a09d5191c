use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use qppm_core::constellation::{Constellation, SlotConfig};
use qppm_core::detect::{self, baselines};
use qppm_core::srm::pc_gram_matrix;
use qppm_core::result::DetectionResult;
use qppm_core::Error;

use crate::error::Result;
use crate::spec::{MethodSel, SweepSpec};

/// One evaluated point. `n`, `h` and `big_h` are 0 for closed forms.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub method: String,
    pub m: usize,
    pub ns: f64,
    pub nbar: f64,
    pub n: usize,
    pub h: usize,
    pub big_h: u64,
    pub pe: f64,
    pub pc: f64,
    pub runtime_s: f64,
    pub trace_deficit: f64,
}

/// A point that could not be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub method: String,
    pub ns: f64,
    pub nbar: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub m: usize,
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

impl Table {
    /// Rows of one curve, in `Ns` order.
    pub fn curve(&self, method: &str, nbar: f64) -> Vec<&Row> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.nbar == nbar)
            .collect()
    }
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
    /// Print one line per finished point on stderr.
    pub progress: bool,
}


#[derive(Clone, Copy, Debug)]
struct Job {
    method: MethodSel,
    ns: f64,
    nbar: f64,
}

fn jobs(spec: &SweepSpec) -> Vec<Job> {
    let mut out = Vec::new();
    for &method in &spec.methods {
        let nbars: &[f64] = if method.noiseless() { &[0.0] } else { &spec.nbar_list };
        for &nbar in nbars {
            for &ns in &spec.ns_grid {
                out.push(Job { method, ns, nbar });
            }
        }
    }
    out
}

type Outcome = Vec<std::result::Result<Row, Failure>>;

fn closed_row(method: &str, m: usize, job: &Job, pe: f64, runtime_s: f64) -> std::result::Result<Row, Failure> {
    if !(0.0..=1.0).contains(&pe) {
        return Err(Failure {
            method: method.into(),
            ns: job.ns,
            nbar: job.nbar,
            message: format!("value {pe:e} is outside [0, 1]"),
        });
    }
    Ok(Row {
        method: method.into(),
        m,
        ns: job.ns,
        nbar: job.nbar,
        n: 0,
        h: 0,
        big_h: 0,
        pe,
        pc: 1.0 - pe,
        runtime_s,
        trace_deficit: 0.0,
    })
}

fn constellation(spec: &SweepSpec, job: &Job) -> Result<Constellation, Error> {
    let c = SlotConfig::new(job.ns, job.nbar)
        .eps(spec.eps)
        .nu(spec.nu)
        .force_n(spec.force_n)
        .force_h(spec.force_h)
        .max_n(spec.caps.max_n)
        .build(spec.m)?;
    let big_h = c.params.big_h();
    if big_h > spec.caps.max_h {
        return Err(Error::CapExceeded {
            dim: big_h,
            cap: spec.caps.max_h,
            hint: " (H = h^m; raise QPPM_MAX_H or force a smaller h)",
        });
    }
    Ok(c)
}

fn evaluate(spec: &SweepSpec, job: &Job) -> Outcome {
    let t = Instant::now();
    let m = spec.m;
    let fail = |method: &str, e: Error| Failure {
        method: method.into(),
        ns: job.ns,
        nbar: job.nbar,
        message: e.to_string(),
    };
    let from_result = |name: &str, c: &Constellation, r: DetectionResult| Row {
        method: name.into(),
        m,
        ns: job.ns,
        nbar: job.nbar,
        n: c.params.n,
        h: c.params.h,
        big_h: c.params.big_h(),
        pe: r.pe,
        pc: r.pc,
        runtime_s: t.elapsed().as_secs_f64(),
        trace_deficit: c.trace_deficit,
    };
    match job.method {
        MethodSel::Srm | MethodSel::Helstrom => {
            let name = job.method.name();
            let res = constellation(spec, job).and_then(|c| {
                let r = if job.method == MethodSel::Srm {
                    pc_gram_matrix(&c)?
                } else {
                    detect::helstrom_ppm2(&c)?
                };
                Ok(from_result(name, &c, r))
            });
            vec![res.map_err(|e| fail(name, e))]
        }
        MethodSel::PureClosedForm => {
            let name = job.method.name();
            vec![detect::pure_ppm_closed_form(m, job.ns)
                .map_err(|e| fail(name, e))
                .and_then(|r| closed_row(name, m, job, r.pe, t.elapsed().as_secs_f64()))]
        }
        MethodSel::Classical => {
            let name = job.method.name();
            vec![detect::classical_ppm(m, job.ns, job.nbar)
                .map_err(|e| fail(name, e))
                .and_then(|r| closed_row(name, m, job, r.pe, t.elapsed().as_secs_f64()))]
        }
        MethodSel::OokBaselines => match baselines(m, job.ns) {
            Err(e) => vec![Err(fail(job.method.name(), e))],
            Ok(b) => {
                let secs = t.elapsed().as_secs_f64();
                [
                    ("ook-classical", b.ook_classical),
                    ("ook-helstrom", b.ook_helstrom),
                    ("ook-helstrom-asymptotic", b.ook_helstrom_asymptotic),
                    ("ppm-slot-counter", b.ppm_slot_counter),
                    ("ppm-quantum-asymptotic", b.ppm_quantum_asymptotic),
                    ("ppm-conditional-nulling", b.ppm_conditional_nulling),
                ]
                .into_iter()
                .map(|(name, pe)| closed_row(name, m, job, pe, secs))
                .collect()
            }
        },
    }
}

/// Evaluates every (method, nbar, Ns) point of `spec`.
///
/// Points are independent and run on a bounded pool of scoped threads.
/// A failing point is recorded in [`Table::failures`] and the sweep goes on.
/// Rows come back sorted by (method, nbar, Ns) whatever the completion order.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<Table> {
    spec.validate()?;
    let jobs = jobs(spec);
    let workers = match opts.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        w => w,
    }
    .min(jobs.len())
    .max(1);

    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let out = evaluate(spec, job);
                if opts.progress {
                    let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                    for r in &out {
                        match r {
                            Ok(r) => eprintln!(
                                "[{k}/{}] {} Ns={} nbar={} Pe={:.4e} ({:.2}s)",
                                jobs.len(),
                                r.method,
                                r.ns,
                                r.nbar,
                                r.pe,
                                r.runtime_s
                            ),
                            Err(f) => eprintln!(
                                "[{k}/{}] {} Ns={} nbar={} failed: {}",
                                jobs.len(),
                                f.method,
                                f.ns,
                                f.nbar,
                                f.message
                            ),
                        }
                    }
                }
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });

    let mut table = Table {
        m: spec.m,
        ..Table::default()
    };
    for out in slots.into_inner().unwrap().into_iter().flatten() {
        for r in out {
            match r {
                Ok(row) => table.rows.push(row),
                Err(f) => table.failures.push(f),
            }
        }
    }
    table.rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.nbar.total_cmp(&b.nbar))
            .then(a.ns.total_cmp(&b.ns))
    });
    table.failures.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.nbar.total_cmp(&b.nbar))
            .then(a.ns.total_cmp(&b.ns))
    });
    Ok(table)
}
