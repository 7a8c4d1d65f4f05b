//! Adaptive 8th-order Dormand–Prince integration (DOP853 tableau, combined
//! 5th/3rd-order error estimate) with an elementwise-uniform tolerance
//! ε_τ (|Y| + 1), |Y| the RMS norm of the state.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub eps_tau: f64,
    /// First trial step (internal time units).
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub safety: f64,
    /// Cap on attempted steps per integration.
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            eps_tau: 1e-10,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            safety: 0.9,
            max_steps: 500_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_eps(eps_tau: f64) -> Self {
        IntegratorConfig {
            eps_tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tau > 0.0 && self.eps_tau <= 1e-3) {
            return Err(Error::Invalid(format!("eps_tau must lie in (0, 1e-3], got {}", self.eps_tau)));
        }
        if !(self.h_min > 0.0 && self.h_min < self.h_max && self.h_init > 0.0) {
            return Err(Error::Invalid(format!(
                "step bounds need 0 < h_min < h_max and h_init > 0 (h_min = {}, h_max = {}, h_init = {})",
                self.h_min, self.h_max, self.h_init
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Invalid(format!("safety factor must lie in (0, 1], got {}", self.safety)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
    /// Seconds spent inside [`integrate`], setup excluded.
    pub wall_seconds: f64,
}

#[allow(clippy::excessive_precision)]
mod tableau {
    pub const STAGES: [(f64, &[(usize, f64)]); 11] = [
        (0.526001519587677318785587544488E-01, &[(0, 5.26001519587677318785587544488E-2)]),
        (0.789002279381515978178381316732E-01, &[(0, 1.97250569845378994544595329183E-2), (1, 5.91751709536136983633785987549E-2)]),
        (0.118350341907227396726757197510E+00, &[(0, 2.95875854768068491816892993775E-2), (2, 8.87627564304205475450678981324E-2)]),
        (0.281649658092772603273242802490E+00, &[(0, 2.41365134159266685502369798665E-1), (2, -8.84549479328286085344864962717E-1), (3, 9.24834003261792003115737966543E-1)]),
        (0.333333333333333333333333333333E+00, &[(0, 3.7037037037037037037037037037E-2), (3, 1.70828608729473871279604482173E-1), (4, 1.25467687566822425016691814123E-1)]),
        (0.25E+00, &[(0, 3.7109375E-2), (3, 1.70252211019544039314978060272E-1), (4, 6.02165389804559606850219397283E-2), (5, -1.7578125E-2)]),
        (0.307692307692307692307692307692E+00, &[(0, 3.70920001185047927108779319836E-2), (3, 1.70383925712239993810214054705E-1), (4, 1.07262030446373284651809199168E-1), (5, -1.53194377486244017527936158236E-2), (6, 8.27378916381402288758473766002E-3)]),
        (0.651282051282051282051282051282E+00, &[(0, 6.24110958716075717114429577812E-1), (3, -3.36089262944694129406857109825E0), (4, -8.68219346841726006818189891453E-1), (5, 2.75920996994467083049415600797E1), (6, 2.01540675504778934086186788979E1), (7, -4.34898841810699588477366255144E1)]),
        (0.6E+00, &[(0, 4.77662536438264365890433908527E-1), (3, -2.48811461997166764192642586468E0), (4, -5.90290826836842996371446475743E-1), (5, 2.12300514481811942347288949897E1), (6, 1.52792336328824235832596922938E1), (7, -3.32882109689848629194453265587E1), (8, -2.03312017085086261358222928593E-2)]),
        (0.857142857142857142857142857142E+00, &[(0, -9.3714243008598732571704021658E-1), (3, 5.18637242884406370830023853209E0), (4, 1.09143734899672957818500254654E0), (5, -8.14978701074692612513997267357E0), (6, -1.85200656599969598641566180701E1), (7, 2.27394870993505042818970056734E1), (8, 2.49360555267965238987089396762E0), (9, -3.0467644718982195003823669022E0)]),
        (1.0, &[(0, 2.27331014751653820792359768449E0), (3, -1.05344954667372501984066689879E1), (4, -2.00087205822486249909675718444E0), (5, -1.79589318631187989172765950534E1), (6, 2.79488845294199600508499808837E1), (7, -2.85899827713502369474065508674E0), (8, -8.87285693353062954433549289258E0), (9, 1.23605671757943030647266201528E1), (10, 6.43392746015763530355970484046E-1)]),
    ];
    pub const B: [(usize, f64); 8] = [(0, 5.42937341165687622380535766363E-2), (5, 4.45031289275240888144113950566E0), (6, 1.89151789931450038304281599044E0), (7, -5.8012039600105847814672114227E0), (8, 3.1116436695781989440891606237E-1), (9, -1.52160949662516078556178806805E-1), (10, 2.01365400804030348374776537501E-1), (11, 4.47106157277725905176885569043E-2)];
    pub const ER: [(usize, f64); 8] = [(0, 0.1312004499419488073250102996E-01), (5, -0.1225156446376204440720569753E+01), (6, -0.4957589496572501915214079952E+00), (7, 0.1664377182454986536961530415E+01), (8, -0.3503288487499736816886487290E+00), (9, 0.3341791187130174790297318841E+00), (10, 0.8192320648511571246570742613E-01), (11, -0.2235530786388629525884427845E-01)];
    pub const BHH: [(usize, f64); 3] = [(0, 0.244094488188976377952755905512E+00), (8, 0.733846688281611857341361741547E+00), (11, 0.220588235294117647058823529412E-01)];
}

use tableau::{B, BHH, ER, STAGES};

fn rms(y: &[f64]) -> f64 {
    (y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64).sqrt()
}

/// Result of a single attempted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Proposed solution at t + h (meaningful only when accepted).
    pub y_new: Vec<f64>,
    /// Error estimate in units of the tolerance; the step is accepted when ≤ 1.
    pub err: f64,
    pub h_next: f64,
}

/// Controller: h · clip(safety · (1/err)^(1/8), 0.2, 5).
pub fn next_step(h: f64, err: f64, safety: f64) -> f64 {
    let fac = if err > 0.0 { safety * err.powf(-0.125) } else { 5.0 };
    h * fac.clamp(0.2, 5.0)
}

struct Stepper {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    evals: u64,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            k: vec![vec![0.0; n]; 12],
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            evals: 0,
        }
    }

    fn eval<F>(&mut self, f: &mut F, t: f64, slot: usize, from_tmp: bool, y: &[f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        self.evals += 1;
        let src = if from_tmp { &self.tmp[..] } else { y };
        f(t, src, &mut self.k[slot])?;
        if let Some(i) = self.k[slot].iter().position(|v| !v.is_finite()) {
            return Err(Error::Integration {
                t,
                msg: format!("non-finite derivative in component {i}"),
            });
        }
        Ok(())
    }

    /// Runs stages 2–12 from `k[0] = f(t, y)` and returns the scaled error.
    /// The candidate solution is left in `y_new`.
    fn attempt<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, eps: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        for (s, (c, row)) in STAGES.iter().enumerate() {
            self.tmp.copy_from_slice(y);
            for &(j, a) in row.iter() {
                let ha = h * a;
                self.tmp.iter_mut().zip(&self.k[j]).for_each(|(v, kj)| *v += ha * kj);
            }
            self.eval(f, t + c * h, s + 1, true, y)?;
        }
        let n = y.len();
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        let mut incr = vec![0.0; n];
        for (i, inc) in incr.iter_mut().enumerate() {
            *inc = B.iter().map(|&(j, b)| b * self.k[j][i]).sum();
        }
        for (i, inc) in incr.iter().enumerate() {
            self.y_new[i] = y[i] + h * inc;
        }
        let scale = eps * (rms(y).max(rms(&self.y_new)) + 1.0);
        for (i, inc) in incr.iter().enumerate() {
            let e3 = inc - BHH.iter().map(|&(j, b)| b * self.k[j][i]).sum::<f64>();
            let e5: f64 = ER.iter().map(|&(j, e)| e * self.k[j][i]).sum();
            err3 += (e3 / scale).powi(2);
            err5 += (e5 / scale).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        Ok(h.abs() * err5 / (deno * n as f64).sqrt())
    }
}

/// One embedded step from `(t, y)` with trial size `h`.
pub fn step_once<F>(mut f: F, y: &[f64], t: f64, h: f64, cfg: &IntegratorConfig) -> Result<StepOutcome>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let mut st = Stepper::new(y.len());
    st.eval(&mut f, t, 0, false, y)?;
    let err = st.attempt(&mut f, t, y, h, cfg.eps_tau)?;
    Ok(StepOutcome {
        accepted: err <= 1.0,
        y_new: st.y_new,
        err,
        h_next: next_step(h, err, cfg.safety).min(cfg.h_max),
    })
}

/// Integrates without touching the state at samples.
pub fn integrate<F>(f: F, y0: &[f64], t_end: f64, out_interval: f64, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    integrate_with(f, |_| Ok(()), y0, t_end, out_interval, cfg)
}

/// Integrates from t = 0 and records the state at every multiple of
/// `out_interval` up to `t_end` (and at `t_end` itself). `on_sample` may
/// modify the state at each sample after t = 0; the modified state is both
/// recorded and used to continue.
pub fn integrate_with<F, P>(
    mut f: F,
    mut on_sample: P,
    y0: &[f64],
    t_end: f64,
    out_interval: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(&mut [f64]) -> Result<()>,
{
    cfg.validate()?;
    if !(t_end > 0.0 && out_interval > 0.0) {
        return Err(Error::Invalid(format!(
            "need t_end > 0 and out_interval > 0 (got {t_end}, {out_interval})"
        )));
    }
    let started = Instant::now();
    let count = (t_end / out_interval * (1.0 + 1e-12)).floor() as usize;
    let mut targets: Vec<f64> = (1..=count).map(|k| k as f64 * out_interval).collect();
    if targets.last().is_none_or(|&last| t_end - last > 1e-9 * out_interval) {
        targets.push(t_end);
    }

    let n = y0.len();
    let mut st = Stepper::new(n);
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut t = 0.0;
    let mut t_comp = 0.0;
    let mut h = cfg.h_init.min(cfg.h_max);
    st.eval(&mut f, t, 0, false, &y)?;

    for &target in &targets {
        let mut last_rejected = false;
        loop {
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_try = if landing { remaining } else { h };
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::Integration {
                    t,
                    msg: format!("step limit {} reached", cfg.max_steps),
                });
            }
            let err = st.attempt(&mut f, t, &y, h_try, cfg.eps_tau)?;
            let proposal = next_step(h_try, err, cfg.safety).min(cfg.h_max);
            if err <= 1.0 {
                stats.accepted += 1;
                std::mem::swap(&mut y, &mut st.y_new);
                let h_next = if last_rejected { proposal.min(h_try) } else { proposal };
                if landing {
                    t = target;
                    t_comp = 0.0;
                    // A truncated landing step should not shrink the schedule.
                    h = if last_rejected { h_next } else { h.max(h_next) };
                    on_sample(&mut y)?;
                    st.eval(&mut f, t, 0, false, &y)?;
                    break;
                }
                // Kahan-compensated t += h_try
                let dt = h_try - t_comp;
                let sum = t + dt;
                t_comp = (sum - t) - dt;
                t = sum;
                h = h_next;
                last_rejected = false;
                st.eval(&mut f, t, 0, false, &y)?;
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h = proposal;
                if h < cfg.h_min {
                    return Err(Error::Integration {
                        t,
                        msg: format!("step size underflow (h = {h:.3e} after rejection)"),
                    });
                }
            }
        }
        times.push(t);
        states.push(y.clone());
    }
    stats.rhs_evals = st.evals;
    Ok(Trajectory {
        times,
        states,
        stats,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
