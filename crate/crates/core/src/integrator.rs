//! Adaptive Dormand–Prince 5(4) integration with a continuous extension and
//! localization of coordinate-plane crossings `Q_i = 0`.
//!
//! The stepper is generic over the state dimension so the bare orbit (6
//! components) and the orbit coupled to its linearization (42 components) share
//! one step controller.

use nalgebra::SVector;

use crate::dynamics::{self, EnergyLevel, RegularizedState};
use crate::error::{Error, Result};

/// Tolerances and budgets for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// `|Q_axis|` required at a localized crossing.
    pub event_tol: f64,
    /// Budget of attempted steps (accepted and rejected) per integration.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            initial_step: 1e-4,
            max_step: 1e-2,
            event_tol: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    /// Same as the default with both tolerances set to `tol`.
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.rtol) && positive(self.atol) && positive(self.event_tol)) {
            return Err(Error::InvalidConfig(
                "rtol, atol and event_tol must be positive".into(),
            ));
        }
        if !(positive(self.initial_step) && self.max_step >= self.initial_step) {
            return Err(Error::InvalidConfig(
                "need max_step >= initial_step > 0".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// An autonomous first-order system `y' = f(y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, y: &SVector<f64, N>) -> Result<SVector<f64, N>>;
}

/// The regularized flow at a fixed energy.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedFlow {
    pub energy: EnergyLevel,
}

impl OdeSystem<6> for RegularizedFlow {
    fn rhs(&self, y: &RegularizedState) -> Result<RegularizedState> {
        dynamics::vector_field(y, self.energy)
    }
}

// Dormand–Prince 5(4) tableau. The systems are autonomous, so the nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Shampine's fourth-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.6;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub s0: f64,
    pub h: f64,
    coeffs: [SVector<f64, N>; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn start(&self) -> SVector<f64, N> {
        self.coeffs[0]
    }

    pub fn end(&self) -> SVector<f64, N> {
        self.coeffs[0] + self.coeffs[1]
    }

    pub fn eval(&self, s: f64) -> SVector<f64, N> {
        let t = (s - self.s0) / self.h;
        let u = 1.0 - t;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        r1 + (r2 + (r3 + (r4 + r5 * u) * t) * u) * t
    }

    pub fn eval_component(&self, s: f64, i: usize) -> f64 {
        let t = (s - self.s0) / self.h;
        let u = 1.0 - t;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        r1[i] + t * (r2[i] + u * (r3[i] + t * (r4[i] + u * r5[i])))
    }

    /// The same step seen through a linear change of variables and a time shift.
    pub fn mapped(&self, m: &nalgebra::SMatrix<f64, N, N>, shift: f64) -> Self {
        Self {
            s0: self.s0 + shift,
            h: self.h,
            coeffs: self.coeffs.map(|c| m * c),
        }
    }
}

/// Step-by-step driver for [`OdeSystem`]s.
pub struct Stepper<'a, F, const N: usize> {
    sys: &'a F,
    cfg: IntegratorConfig,
    s: f64,
    y: SVector<f64, N>,
    dy: SVector<f64, N>,
    h: f64,
    attempts: usize,
}

impl<'a, F: OdeSystem<N>, const N: usize> Stepper<'a, F, N> {
    /// `direction` is the sign of the time direction.
    pub fn new(
        sys: &'a F,
        s0: f64,
        y0: SVector<f64, N>,
        direction: f64,
        cfg: IntegratorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !y0.iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence { s: s0 });
        }
        let dy = sys.rhs(&y0)?;
        let sign = if direction < 0.0 { -1.0 } else { 1.0 };
        Ok(Self {
            sys,
            cfg,
            s: s0,
            y: y0,
            dy,
            h: sign * cfg.initial_step,
            attempts: 0,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn state(&self) -> &SVector<f64, N> {
        &self.y
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// Takes one accepted step that does not pass `limit`; lands on it exactly when clipped.
    pub fn step_towards(&mut self, limit: f64) -> Result<DenseStep<N>> {
        let cfg = self.cfg;
        loop {
            if self.attempts >= cfg.max_steps {
                return Err(Error::IntegrationBudget {
                    max_steps: cfg.max_steps,
                    s: self.s,
                });
            }
            self.attempts += 1;

            let remaining = limit - self.s;
            let mut h = self.h;
            let clipped = h.abs() >= remaining.abs();
            if clipped {
                h = remaining;
            }
            if h.abs() <= 4.0 * f64::EPSILON * self.s.abs().max(1e-300) {
                return Err(Error::StepUnderflow { s: self.s, h });
            }

            let y = self.y;
            let k1 = self.dy;
            let k2 = self.sys.rhs(&(y + k1 * (h * A21)))?;
            let k3 = self.sys.rhs(&(y + (k1 * A31 + k2 * A32) * h))?;
            let k4 = self.sys.rhs(&(y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
            let k5 = self.sys.rhs(&(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h))?;
            let k6 = self
                .sys
                .rhs(&(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h))?;
            let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
            let k7 = self.sys.rhs(&y_new)?;
            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;

            let mut err = 0.0_f64;
            for i in 0..N {
                let scale = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((err_vec[i] / scale).abs());
            }

            if !err.is_finite() || !y_new.iter().all(|x| x.is_finite()) {
                if h.abs() < 1e-12 {
                    return Err(Error::Divergence { s: self.s });
                }
                self.h = h * MIN_FACTOR;
                continue;
            }

            if err <= 1.0 {
                let r2 = y_new - y;
                let r3 = k1 * h - r2;
                let r4 = r2 - k7 * h - r3;
                let r5 = (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h;
                let step = DenseStep {
                    s0: self.s,
                    h,
                    coeffs: [y, r2, r3, r4, r5],
                };
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let mut next = h * factor;
                if clipped && next.abs() < self.h.abs() {
                    next = self.h;
                }
                self.h = next.signum() * next.abs().min(cfg.max_step);
                self.s = if clipped { limit } else { self.s + h };
                self.y = y_new;
                self.dy = k7;
                return Ok(step);
            }

            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            self.h = h * factor;
        }
    }
}

/// States at each of `points` (monotone, all on one side of `s0`), hitting every point exactly.
pub fn propagate<F: OdeSystem<N>, const N: usize>(
    sys: &F,
    s0: f64,
    y0: SVector<f64, N>,
    points: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<SVector<f64, N>>> {
    let direction = points.last().map_or(1.0, |&end| end - s0);
    let mut stepper = Stepper::new(sys, s0, y0, direction, *cfg)?;
    let mut out = Vec::with_capacity(points.len());
    for &target in points {
        if (target - stepper.s()) * direction < 0.0 {
            return Err(Error::InvalidConfig(
                "propagation points must be monotone in the direction of integration".into(),
            ));
        }
        while stepper.s() != target {
            stepper.step_towards(target)?;
        }
        out.push(*stepper.state());
    }
    Ok(out)
}

/// A localized coordinate-plane crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub s: f64,
    /// Crossing axis, 1-based.
    pub axis: usize,
    pub state: RegularizedState,
    /// Sign of `Q̇_axis` at the crossing.
    pub crossing_sign: i8,
}

/// Maximum refinement iterations for a crossing.
const EVENT_ITERATIONS: usize = 80;

/// Crossings of `Q_axis = 0` (0-based `axis`) inside `step`, localized on its continuous extension.
fn crossing_in_step(step: &DenseStep<6>, axis: usize, event_tol: f64) -> Option<EventRecord> {
    let (ga, gb) = (step.start()[axis], step.end()[axis]);
    let crosses = (ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0) || (gb == 0.0 && ga != 0.0);
    if !crosses {
        return None;
    }
    let (mut a, mut b) = (step.s0, step.s1());
    let (mut fa, mut fb) = (ga, gb);
    let mut s = b;
    let mut fs = fb;
    // Illinois-modified secant inside the bracket; bisection when the secant leaves it.
    let mut side = 0i8;
    for _ in 0..EVENT_ITERATIONS {
        if fs.abs() <= event_tol {
            break;
        }
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > a.min(b) && x < a.max(b)) || !x.is_finite() {
            x = 0.5 * (a + b);
        }
        let fx = step.eval_component(x, axis);
        s = x;
        fs = fx;
        if fx == 0.0 {
            break;
        }
        if (fx > 0.0) == (fb > 0.0) {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
        if a == b {
            break;
        }
    }
    Some(EventRecord {
        s,
        axis: axis + 1,
        state: step.eval(s),
        crossing_sign: if gb > ga { 1 } else { -1 },
    })
}

/// All crossings on `axes` (0-based) inside `step` that lie strictly after `after`, ordered by `s`.
pub fn crossings(
    step: &DenseStep<6>,
    axes: &[usize],
    after: f64,
    event_tol: f64,
) -> Vec<EventRecord> {
    let mut events: Vec<EventRecord> = axes
        .iter()
        .filter_map(|&axis| crossing_in_step(step, axis, event_tol))
        .filter(|ev| ev.s > after)
        .collect();
    events.sort_by(|x, y| x.s.total_cmp(&y.s));
    events
}

/// Dense record of an integrated orbit segment.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, RegularizedState)>,
    events: Vec<EventRecord>,
    steps: Vec<DenseStep<6>>,
}

impl Trajectory {
    /// Builds a trajectory from accepted steps that chain end to start.
    pub fn from_steps(steps: Vec<DenseStep<6>>, events: Vec<EventRecord>) -> Self {
        let mut samples = Vec::with_capacity(steps.len() + 1);
        if let Some(first) = steps.first() {
            samples.push((first.s0, first.start()));
        }
        samples.extend(steps.iter().map(|st| (st.s1(), st.end())));
        Self {
            samples,
            events,
            steps,
        }
    }

    /// A single-point trajectory with no interpolant.
    pub fn point(s: f64, state: RegularizedState) -> Self {
        Self {
            samples: vec![(s, state)],
            events: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn samples(&self) -> &[(f64, RegularizedState)] {
        &self.samples
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn steps(&self) -> &[DenseStep<6>] {
        &self.steps
    }

    pub fn is_dense(&self) -> bool {
        !self.steps.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        let first = self.samples.first().map_or(f64::NAN, |x| x.0);
        let last = self.samples.last().map_or(f64::NAN, |x| x.0);
        (first, last)
    }

    pub fn final_state(&self) -> RegularizedState {
        self.samples.last().map(|x| x.1).unwrap_or_default()
    }

    /// Index of the step containing `s`.
    pub fn segment_index(&self, s: f64) -> Option<usize> {
        let (a, b) = self.span();
        if !(s >= a && s <= b) {
            return None;
        }
        if self.steps.is_empty() {
            return Some(0);
        }
        let i = self.samples.partition_point(|x| x.0 <= s);
        Some(i.saturating_sub(1).min(self.steps.len() - 1))
    }

    /// Continuous extension of step `i` at `s`.
    pub fn eval_segment(&self, i: usize, s: f64) -> RegularizedState {
        match self.steps.get(i) {
            Some(step) => step.eval(s),
            None => self.samples[0].1,
        }
    }

    pub fn interpolate(&self, s: f64) -> Option<RegularizedState> {
        self.segment_index(s).map(|i| self.eval_segment(i, s))
    }

    /// `n` uniformly spaced samples over the full span, endpoints included.
    pub fn resample(&self, n: usize) -> Vec<(f64, RegularizedState)> {
        let (a, b) = self.span();
        uniform_grid(a, b, n)
            .into_iter()
            .filter_map(|s| self.interpolate(s).map(|y| (s, y)))
            .collect()
    }
}

/// `n` points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|j| {
                if j == n - 1 {
                    b
                } else {
                    a + (b - a) * j as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Integrates the regularized flow over `span`, recording every `Q_i = 0` crossing.
pub fn integrate(
    s0: RegularizedState,
    energy: EnergyLevel,
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let (start, end) = span;
    if !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "integration span ({start}, {end}) must be increasing"
        )));
    }
    if end == start {
        return Ok(Trajectory::point(start, s0));
    }
    let flow = RegularizedFlow { energy };
    let mut stepper = Stepper::new(&flow, start, s0, 1.0, *cfg)?;
    let exclusion = start + 10.0 * f64::EPSILON * (end - start);
    let mut steps = Vec::new();
    let mut events = Vec::new();
    while stepper.s() < end {
        let step = stepper.step_towards(end)?;
        events.extend(crossings(&step, &[0, 1, 2], exclusion, cfg.event_tol));
        steps.push(step);
    }
    Ok(Trajectory::from_steps(steps, events))
}

/// State and `s` at the `count`-th crossing of `Q_axis = 0` after `s = 0` (`axis` is 1-based).
pub fn integrate_to_event(
    s0: RegularizedState,
    energy: EnergyLevel,
    axis: usize,
    count: usize,
    cfg: &IntegratorConfig,
) -> Result<(RegularizedState, f64)> {
    if !(1..=3).contains(&axis) || count == 0 {
        return Err(Error::InvalidConfig(format!(
            "need axis in 1..=3 and count >= 1 (got axis {axis}, count {count})"
        )));
    }
    let flow = RegularizedFlow { energy };
    let mut stepper = Stepper::new(&flow, 0.0, s0, 1.0, *cfg)?;
    let mut seen = 0;
    loop {
        let step = stepper.step_towards(f64::INFINITY)?;
        let exclusion = 10.0 * f64::EPSILON * step.s1();
        for ev in crossings(&step, &[axis - 1], exclusion, cfg.event_tol) {
            seen += 1;
            if seen == count {
                return Ok((ev.state, ev.s));
            }
        }
    }
}
