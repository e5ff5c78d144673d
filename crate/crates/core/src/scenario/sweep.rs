use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::machine::{classify, regime_boundaries, MachineRegime, VirtualQubit};

use super::config::{SweepParam, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// Value of the swept temperature.
    pub value: f64,
    pub t1: f64,
    pub t2: f64,
    pub beta_v: f64,
    /// `None` at infinite virtual temperature.
    pub t_v: Option<f64>,
    pub zeq: f64,
    pub neq: f64,
    pub regime: MachineRegime,
}

/// Evenly spaced points with the regime boundaries that fall inside the
/// range added, sorted and free of duplicates.
fn sweep_points(spec: &SweepSpec, e1: f64, e2: f64, fixed: f64) -> Result<Vec<f64>> {
    let n = spec.steps;
    let span = spec.to - spec.from;
    let mut pts: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                spec.to
            } else {
                spec.from + span * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let boundaries = match spec.param {
        SweepParam::T2 => {
            let (a, b) = regime_boundaries(e1, e2, fixed)?;
            [a, b]
        }
        // same loci seen from T1: T1 = T2 and T1 = (E1/E2)·T2
        SweepParam::T1 => [fixed, e1 / e2 * fixed],
    };
    pts.extend(boundaries.into_iter().filter(|b| (spec.from..=spec.to).contains(b)));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// Virtual temperature and regime across a temperature range; `fixed` is
/// the temperature that is held constant.
pub fn sweep(e1: f64, e2: f64, fixed: f64, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let pts = sweep_points(spec, e1, e2, fixed)?;
    pts.par_iter()
        .map(|&v| {
            let (t1, t2) = match spec.param {
                SweepParam::T2 => (fixed, v),
                SweepParam::T1 => (v, fixed),
            };
            let vq = VirtualQubit::new(e1, e2, t1, t2)?;
            Ok(SweepRow {
                value: v,
                t1,
                t2,
                beta_v: vq.beta_v,
                t_v: vq.temperature(),
                zeq: vq.zeq,
                neq: vq.neq,
                regime: classify(e1, e2, t1, t2)?,
            })
        })
        .collect()
}

/// T2 sweep at fixed `T1`.
pub fn sweep_t2(e1: f64, e2: f64, t1: f64, from: f64, to: f64, steps: usize) -> Result<Vec<SweepRow>> {
    let spec = SweepSpec {
        param: SweepParam::T2,
        from,
        to,
        steps,
    };
    sweep(e1, e2, t1, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_range_transitions() {
        let rows = sweep_t2(1.0, 2.0, 1.0, 0.5, 4.0, 8).unwrap();
        let t2: Vec<f64> = rows.iter().map(|r| r.t2).collect();
        assert_eq!(t2, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
        use MachineRegime::*;
        let regimes: Vec<MachineRegime> = rows.iter().map(|r| r.regime).collect();
        assert_eq!(
            regimes,
            vec![Refrigerator, ReversibleBoundary, HeatPump, EngineBoundary, HeatEngine, HeatEngine, HeatEngine, HeatEngine]
        );
        let at2 = rows[3];
        assert_eq!(at2.beta_v, 0.0);
        assert_eq!(at2.t_v, None);
        assert!((rows[7].t_v.unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn boundaries_are_inserted() {
        let rows = sweep_t2(1.0, 2.0, 1.0, 0.3, 3.0, 4).unwrap();
        let want = [0.3, 1.0, 1.2, 2.0, 2.1, 3.0];
        assert_eq!(rows.len(), want.len());
        for (r, w) in rows.iter().zip(want) {
            assert!((r.t2 - w).abs() < 1e-12);
        }
        let spec = SweepSpec { param: SweepParam::T1, from: 0.2, to: 3.0, steps: 3 };
        let rows = sweep(1.0, 2.0, 2.0, &spec).unwrap();
        assert!(rows.iter().any(|r| r.t1 == 1.0 && r.regime == MachineRegime::EngineBoundary));
        assert!(rows.iter().any(|r| r.t1 == 2.0 && r.regime == MachineRegime::ReversibleBoundary));
    }

    #[test]
    fn beta_v_crosses_zero_continuously() {
        let rows = sweep_t2(1.0, 2.0, 1.0, 1.5, 2.5, 201).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].beta_v < w[0].beta_v);
            assert!((w[1].beta_v - w[0].beta_v).abs() < 0.01);
        }
    }
}
