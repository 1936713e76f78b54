//! Convex combinations of two zero-capacity channels: the two-use radius
//! r_super(p) = p²·r_HH + 2p(1−p)·r_HA + (1−p)²·r_AA, its sweep over p,
//! and detection of the p-domain where it is positive.

use rayon::prelude::*;

use crate::capacity::{
    max_coherent_information_from, private_capacity_lb, quantum_capacity_lb, CapacityResult, OptimizerConfig,
};
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Reference combination radius r_HA of the Horodecki ⊗ 50%-erasure pair.
pub const REFERENCE_RADIUS_HA: f64 = 0.01;
/// Open p-interval in which the reference radius applies.
pub const REFERENCE_GATE: (f64, f64) = (0.0, 0.0041);
/// Reference private-capacity scale of the Horodecki channel.
pub const REFERENCE_PRIVATE: f64 = 0.02;
/// Reference weight of r_HA quoted for p = 0.004.
pub const REFERENCE_WEIGHT_AT_0004: f64 = 0.0081;

/// Q(N₁ ⊗ N₂) ≥ ½·P(N₁) when N₂ is a 50% erasure channel.
pub fn smith_yard_bound(p_private: f64) -> Result<f64> {
    if !(p_private >= 0.0) {
        return Err(Error::Parameter(format!(
            "private capacity must be >= 0 (got {p_private})"
        )));
    }
    Ok(0.5 * p_private)
}

/// 1 − q·log₂q − (1−q)·log₂(1−q), the Horodecki private-capacity
/// expression in its Kraus parameter q.
pub fn horodecki_private_lb(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("q must lie in (0, 1) (got {q})")));
    }
    Ok(1.0 + linalg::binary_entropy(q))
}

/// The Kraus parameter q = √2/(1+√2).
pub fn horodecki_q() -> f64 {
    2f64.sqrt() / (1.0 + 2f64.sqrt())
}

#[derive(Clone, Debug)]
pub struct CombinationRadius {
    /// quantum_capacity_lb of a ⊗ b, for the pair (not divided by two).
    pub value: f64,
    pub capacity: CapacityResult,
    /// ½(P⁽¹⁾(a) + P⁽¹⁾(b)) when both private searches converged.
    pub private_floor: Option<f64>,
}

impl CombinationRadius {
    pub fn per_use(&self) -> f64 {
        self.value / 2.0
    }
}

/// Lower bound on the coherent information of a ⊗ b. The search also
/// starts from [`smith_yard_inputs`].
pub fn combination_radius(a: &KrausChannel, b: &KrausChannel, cfg: &OptimizerConfig) -> Result<CombinationRadius> {
    let joint = a.tensor(b);
    let seeds = smith_yard_inputs(a.dim_in(), b.dim_in());
    let capacity = if seeds.is_empty() {
        quantum_capacity_lb(&joint, cfg)?
    } else {
        max_coherent_information_from(&joint, cfg, &seeds)?
    };
    let pa = private_capacity_lb(a, cfg)?;
    let pb = private_capacity_lb(b, cfg)?;
    let private_floor = (pa.converged && pb.converged).then(|| 0.5 * (pa.value + pb.value));
    Ok(CombinationRadius {
        value: capacity.value,
        capacity,
        private_floor,
    })
}

/// Inputs on (A ⊗ B) in which B is maximally entangled with a
/// dim_B-dimensional factor of A and the rest of A is maximally mixed.
/// Both placements of that factor (leading and trailing) are returned.
/// Empty when dim_B does not divide dim_A or dim_B = 1.
pub fn smith_yard_inputs(dim_a: usize, dim_b: usize) -> Vec<CMatrix> {
    if dim_b < 2 || dim_a % dim_b != 0 {
        return Vec::new();
    }
    let rest = dim_a / dim_b;
    let d = dim_a * dim_b;
    let mut out = Vec::new();
    for leading in [false, true] {
        if rest == 1 && leading {
            break;
        }
        let mut rho = CMatrix::zeros(d, d);
        for r in 0..rest {
            // |Φ⟩ = Σ_i |i⟩_{A-factor} |i⟩_B / √dim_B, tensored with |r⟩ on the rest of A.
            let mut v = nalgebra::DVector::<linalg::C64>::zeros(d);
            for i in 0..dim_b {
                let a_index = if leading { i * rest + r } else { r * dim_b + i };
                v[a_index * dim_b + i] = c(1.0 / (dim_b as f64).sqrt(), 0.0);
            }
            rho += (&v * v.adjoint()).unscale(rest as f64);
        }
        out.push(rho);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvaluatorKind {
    /// Radii fixed to the reference values: r_HH = r_AA = 0 and
    /// r_HA = 0.01 inside the reference gate.
    PaperConstants,
    /// Radii from [`combination_radius`] on the configured channels.
    CoherentSearch,
}

impl EvaluatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PaperConstants => "paper-constants",
            Self::CoherentSearch => "coherent-search",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper-constants" => Ok(Self::PaperConstants),
            "coherent-search" => Ok(Self::CoherentSearch),
            _ => Err(Error::Parse(format!("unknown evaluator '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub p_grid: Vec<f64>,
    /// The positive-private-capacity channel (H).
    pub channel_a: Option<KrausChannel>,
    /// The erasure-type channel (A).
    pub channel_b: Option<KrausChannel>,
    pub evaluator: EvaluatorKind,
    pub threshold: f64,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl SweepConfig {
    pub fn paper_constants(p_grid: Vec<f64>) -> Self {
        Self {
            p_grid,
            channel_a: None,
            channel_b: None,
            evaluator: EvaluatorKind::PaperConstants,
            threshold: 0.0,
            seed: 0,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Evenly spaced grid start, start+step, … up to stop (inclusive within
/// half a step). Points are i·step + start to avoid drift.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Parameter(format!(
            "grid needs step > 0 and stop >= start (got {start}:{stop}:{step})"
        )));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub r_hh: f64,
    pub r_ha: f64,
    pub r_aa: f64,
    pub r_super: f64,
    /// p²·r_HH.
    pub w_hh: f64,
    /// 2p(1−p)·r_HA.
    pub w_ha: f64,
    /// (1−p)²·r_AA.
    pub w_aa: f64,
    /// Set when the evaluator failed at this point.
    pub flag: Option<String>,
}

impl SweepRow {
    fn compose(p: f64, r_hh: f64, r_ha: f64, r_aa: f64) -> Self {
        let w_hh = p * p * r_hh;
        let w_ha = 2.0 * p * (1.0 - p) * r_ha;
        let w_aa = (1.0 - p) * (1.0 - p) * r_aa;
        Self {
            p,
            r_hh,
            r_ha,
            r_aa,
            r_super: w_hh + w_ha + w_aa,
            w_hh,
            w_ha,
            w_aa,
            flag: None,
        }
    }

    fn failed(p: f64, why: String) -> Self {
        Self {
            flag: Some(why),
            ..Self::compose(p, f64::NAN, f64::NAN, f64::NAN)
        }
    }

    /// |r_super − (p²r_HH + 2p(1−p)r_HA + (1−p)²r_AA)|.
    pub fn recomposition_residual(&self) -> f64 {
        let p = self.p;
        (self.r_super
            - (p * p * self.r_hh + 2.0 * p * (1.0 - p) * self.r_ha + (1.0 - p) * (1.0 - p) * self.r_aa))
            .abs()
    }
}

/// A maximal run of grid points with r_super above the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainInterval {
    pub first_inside: f64,
    pub last_inside: f64,
    /// Grid point just before the run (the run's first point if none).
    pub lower: f64,
    /// Grid point just after the run (the run's last point if none).
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub domain: Vec<DomainInterval>,
    pub evaluator: EvaluatorKind,
    pub threshold: f64,
    /// Free-form notes (evaluator settings, numeric discrepancies).
    pub notes: Vec<String>,
}

impl SweepReport {
    /// Largest recomposition residual over unflagged rows.
    pub fn max_recomposition_residual(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.flag.is_none())
            .map(SweepRow::recomposition_residual)
            .fold(0.0, f64::max)
    }
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    for (i, p) in cfg.p_grid.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
        }
        if i > 0 && !(cfg.p_grid[i - 1] < *p) {
            return Err(Error::Parameter("p grid must be strictly increasing".into()));
        }
    }
    let weight = 2.0 * 0.004 * (1.0 - 0.004);
    let mut notes = vec![
        format!("evaluator={}", cfg.evaluator.name()),
        format!("seed={}", cfg.seed),
        format!(
            "weight 2p(1-p) at p=0.004 is {} (reference value {})",
            fmt12(weight),
            REFERENCE_WEIGHT_AT_0004
        ),
        format!(
            "horodecki_private_lb(sqrt2/(1+sqrt2)) = {} vs reference private scale {}",
            fmt12(horodecki_private_lb(horodecki_q())?),
            REFERENCE_PRIVATE
        ),
    ];

    let rows: Vec<SweepRow> = match cfg.evaluator {
        EvaluatorKind::PaperConstants => {
            notes.push(format!(
                "r_HH=0 r_AA=0 r_HA={} for {} < p < {}",
                REFERENCE_RADIUS_HA, REFERENCE_GATE.0, REFERENCE_GATE.1
            ));
            cfg.p_grid
                .par_iter()
                .map(|&p| {
                    let inside = p > REFERENCE_GATE.0 && p < REFERENCE_GATE.1;
                    SweepRow::compose(p, 0.0, if inside { REFERENCE_RADIUS_HA } else { 0.0 }, 0.0)
                })
                .collect()
        }
        EvaluatorKind::CoherentSearch => {
            let (Some(h), Some(a)) = (&cfg.channel_a, &cfg.channel_b) else {
                return Err(Error::Parameter("coherent-search needs both channels".into()));
            };
            let opt = OptimizerConfig {
                seed: cfg.seed,
                ..cfg.optimizer
            };
            // The radii do not depend on p; evaluate them once.
            let radii = (|| -> Result<[f64; 3]> {
                let hh = combination_radius(h, h, &opt)?;
                let ha = combination_radius(h, a, &opt)?;
                let aa = combination_radius(a, a, &opt)?;
                for (name, r) in [("HH", &hh), ("HA", &ha), ("AA", &aa)] {
                    notes.push(format!(
                        "r_{name}={} converged={} private_floor={}",
                        fmt12(r.value),
                        r.capacity.converged,
                        r.private_floor.map(fmt12).unwrap_or_else(|| "n/a".into())
                    ));
                }
                let qh = quantum_capacity_lb(h, &opt)?.value;
                let qa = quantum_capacity_lb(a, &opt)?.value;
                notes.push(format!("single-use Q lower bounds: H={} A={}", fmt12(qh), fmt12(qa)));
                Ok([hh.value, ha.value, aa.value])
            })();
            match radii {
                Ok([hh, ha, aa]) => cfg.p_grid.iter().map(|&p| SweepRow::compose(p, hh, ha, aa)).collect(),
                Err(e) => {
                    let why = e.to_string();
                    notes.push(format!("evaluator failed: {why}"));
                    cfg.p_grid.iter().map(|&p| SweepRow::failed(p, why.clone())).collect()
                }
            }
        }
    };

    let mut report = SweepReport {
        rows,
        domain: Vec::new(),
        evaluator: cfg.evaluator,
        threshold: cfg.threshold,
        notes,
    };
    report.domain = detect_domain(&report, cfg.threshold);
    Ok(report)
}

/// Maximal consecutive runs of rows with r_super > threshold.
pub fn detect_domain(report: &SweepReport, threshold: f64) -> Vec<DomainInterval> {
    let rows = &report.rows;
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if rows[i].r_super > threshold {
            let start = i;
            while i + 1 < rows.len() && rows[i + 1].r_super > threshold {
                i += 1;
            }
            out.push(DomainInterval {
                first_inside: rows[start].p,
                last_inside: rows[i].p,
                lower: if start > 0 { rows[start - 1].p } else { rows[start].p },
                upper: rows.get(i + 1).map_or(rows[i].p, |r| r.p),
            });
        }
        i += 1;
    }
    out
}

/// Twelve significant digits, the shortest form that round-trips at that
/// precision (e.g. `3.992e-05`, `0.01`).
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    if (-4..12).contains(&exp) {
        let digits = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", digits, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}
