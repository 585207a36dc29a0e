//! Fill-order controller for the three-container water loop.
//!
//! One pump in the main tank feeds container 1; inter-container valves let
//! the flow continue to containers 2 and 3; a drain valve returns container 3
//! to the tank. Levels are integer percent of a container. The tank holds
//! three containers' worth of water and its volume is tracked in the same
//! container-percent units.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

/// Tank volume in container-percent units (three full containers).
pub const TANK_CAPACITY: u16 = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaterSystemState {
    /// Tank volume in container-percent units, `0..=TANK_CAPACITY`.
    pub tank: u16,
    pub containers: [u8; 3],
    pub pump: bool,
    pub inter_valves: [bool; 2],
    pub drain_valve: bool,
    pub targets: [u8; 3],
}

/// External command for one tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tick {
    pub drain: bool,
}

impl WaterSystemState {
    pub fn idle(tank: u16, containers: [u8; 3], targets: [u8; 3]) -> Self {
        Self {
            tank,
            containers,
            pump: false,
            inter_valves: [false; 2],
            drain_valve: false,
            targets,
        }
    }

    pub fn tank_level_percent(&self) -> f64 {
        100.0 * self.tank as f64 / TANK_CAPACITY as f64
    }

    pub fn below_target(&self, i: usize) -> bool {
        self.containers[i] < self.targets[i]
    }

    pub fn all_at_target(&self) -> bool {
        (0..3).all(|i| !self.below_target(i))
    }

    /// Total shortfall below target, in percent.
    pub fn deficit(&self) -> u32 {
        (0..3)
            .map(|i| self.targets[i].saturating_sub(self.containers[i]) as u32)
            .sum()
    }

    /// All at target with every actuator at rest.
    pub fn is_settled(&self) -> bool {
        self.all_at_target() && !self.pump && !self.drain_valve && self.inter_valves == [false; 2]
    }

    pub fn is_valid(&self) -> bool {
        self.tank <= TANK_CAPACITY && self.containers.iter().chain(&self.targets).all(|&l| l <= 100)
    }

    /// `pump ⇒ some container below target` and `drain open ⇒ pump off`.
    pub fn is_safe(&self) -> bool {
        (!self.pump || !self.all_at_target()) && !(self.drain_valve && self.pump)
    }
}

/// Controller with a fixed per-tick flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WaterController {
    /// Percent of a container moved per tick by the pump or the drain.
    pub fill_rate: u8,
}

impl Default for WaterController {
    fn default() -> Self {
        Self { fill_rate: 5 }
    }
}

impl WaterController {
    /// The pump delivers into the first container (in fill order) below
    /// target; the valves upstream of it are open so the flow passes through
    /// containers already at target. After water moves, the actuators are
    /// re-derived from the new levels, so the pump stops in the tick the last
    /// container reaches target. A drain command closes the pump and valves
    /// and returns water from container 3 to the tank.
    pub fn step(&self, s: &WaterSystemState, tick: Tick) -> WaterSystemState {
        let rate = self.fill_rate as u16;
        let mut next = *s;
        next.inter_valves = [false; 2];
        if tick.drain {
            next.pump = false;
            next.drain_valve = true;
            let room = TANK_CAPACITY - s.tank;
            let amount = rate.min(s.containers[2] as u16).min(room);
            next.containers[2] -= amount as u8;
            next.tank += amount;
            return next;
        }
        next.drain_valve = false;
        if let Some(k) = Self::fill_target(s) {
            let amount = rate.min(s.tank).min(100 - s.containers[k] as u16);
            next.containers[k] += amount as u8;
            next.tank -= amount;
        }
        match Self::fill_target(&next) {
            Some(k) => {
                next.pump = true;
                for v in 0..k {
                    next.inter_valves[v] = true;
                }
            }
            None => next.pump = false,
        }
        next
    }

    /// First container below target, if the tank can supply any water.
    fn fill_target(s: &WaterSystemState) -> Option<usize> {
        if s.tank == 0 {
            return None;
        }
        (0..3).find(|&i| s.below_target(i))
    }

    /// Ticks needed to bring every container to target, bounded by
    /// `deficit / fill_rate + 3` when the tank can cover the deficit.
    pub fn liveness_bound(&self, s: &WaterSystemState) -> u32 {
        s.deficit() / self.fill_rate as u32 + 3
    }
}

/// One-step transition: `water_step(state, tick)` with the default controller.
pub fn water_step(state: &WaterSystemState, tick: Tick) -> WaterSystemState {
    WaterController::default().step(state, tick)
}

/// States from `initial` through `ticks` steps; `drain_ticks` lists the
/// ticks on which the drain command is given.
pub fn simulate(
    controller: &WaterController,
    initial: WaterSystemState,
    ticks: usize,
    drain_ticks: &[usize],
) -> Vec<WaterSystemState> {
    let mut states = Vec::with_capacity(ticks + 1);
    states.push(initial);
    for t in 1..=ticks {
        let tick = Tick {
            drain: drain_ticks.contains(&t),
        };
        let next = controller.step(states.last().expect("non-empty"), tick);
        states.push(next);
    }
    states
}

/// One CSV row per state, tick 0 being the initial state.
pub fn trace_csv(states: &[WaterSystemState]) -> String {
    let mut out =
        String::from("tick,tank_percent,c1,c2,c3,target1,target2,target3,pump,valve12,valve23,drain,all_at_target\n");
    let b = |v: bool| u8::from(v);
    for (t, s) in states.iter().enumerate() {
        out.push_str(&format!(
            "{t},{:.2},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.tank_level_percent(),
            s.containers[0],
            s.containers[1],
            s.containers[2],
            s.targets[0],
            s.targets[1],
            s.targets[2],
            b(s.pump),
            b(s.inter_valves[0]),
            b(s.inter_valves[1]),
            b(s.drain_valve),
            b(s.all_at_target()),
        ));
    }
    out
}

/// Outcome of the exhaustive check.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ModelCheckReport {
    pub initial_states: usize,
    pub reachable_states: usize,
    pub safety_violations: Vec<String>,
    pub liveness_violations: Vec<String>,
    /// Reachable states whose tank cannot cover the deficit.
    pub supply_limited_states: usize,
}

impl ModelCheckReport {
    pub fn passed(&self) -> bool {
        self.safety_violations.is_empty() && self.liveness_violations.is_empty()
    }
}

/// Breadth-first exploration over a discretized level grid.
///
/// Container levels and targets range over `levels`; the tank ranges over
/// every multiple of the controller's fill rate up to capacity. Initial states
/// have every actuator off; both tick commands are explored from each state.
/// Safety is checked on every reachable state. Liveness: from every reachable
/// state whose tank covers its deficit, undrained ticks reach all-at-target
/// within [`WaterController::liveness_bound`] and settle one tick later.
pub fn model_check(controller: &WaterController, levels: &[u8]) -> ModelCheckReport {
    let rate = controller.fill_rate as u16;
    let tanks: Vec<u16> = (0..=TANK_CAPACITY / rate).map(|k| k * rate).collect();
    let mut report = ModelCheckReport::default();
    let mut seen: HashSet<WaterSystemState> = HashSet::new();
    let mut queue = VecDeque::new();

    for &t in &tanks {
        for &a in levels {
            for &b in levels {
                for &c in levels {
                    for &ta in levels {
                        for &tb in levels {
                            for &tc in levels {
                                let s = WaterSystemState::idle(t, [a, b, c], [ta, tb, tc]);
                                report.initial_states += 1;
                                if seen.insert(s) {
                                    queue.push_back(s);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    while let Some(s) = queue.pop_front() {
        if !s.is_safe() && report.safety_violations.len() < 10 {
            report.safety_violations.push(format!("{s:?}"));
        }
        for drain in [false, true] {
            let n = controller.step(&s, Tick { drain });
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    report.reachable_states = seen.len();

    for s in &seen {
        if (s.tank as u32) < s.deficit() {
            report.supply_limited_states += 1;
            continue;
        }
        let bound = controller.liveness_bound(s);
        let mut cur = *s;
        let mut ticks = 0;
        while !cur.all_at_target() && ticks <= bound {
            cur = controller.step(&cur, Tick::default());
            ticks += 1;
        }
        let settled = controller.step(&cur, Tick::default());
        if (ticks > bound || !settled.is_settled()) && report.liveness_violations.len() < 10 {
            report
                .liveness_violations
                .push(format!("{s:?} after {ticks} ticks (bound {bound})"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: u8 = 60;

    fn at(levels: [u8; 3]) -> WaterSystemState {
        WaterSystemState::idle(TANK_CAPACITY, levels, [T; 3])
    }

    #[test]
    fn all_at_target_is_terminal() {
        let s = water_step(&at([T; 3]), Tick::default());
        assert!(s.is_settled());
        assert_eq!(water_step(&s, Tick::default()), s);
    }

    #[test]
    fn only_first_container_low() {
        let s = water_step(&at([T - 10, T, T]), Tick::default());
        assert!(s.pump);
        assert_eq!(s.inter_valves, [false, false]);
    }

    #[test]
    fn fill_order_rule_over_all_combinations() {
        // Enumerate the 8 at/below patterns; the rule is: pump on iff some
        // container is low, and valve i open iff containers 0..=i are at
        // target while a later one is low.
        for mask in 0u8..8 {
            let low = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
            let levels = low.map(|l| if l { T - 20 } else { T });
            let s = water_step(&at(levels), Tick::default());
            let any_low = low.iter().any(|&l| l);
            assert_eq!(s.pump, any_low, "mask {mask:03b}");
            for v in 0..2 {
                let upstream_full = low[..=v].iter().all(|&l| !l);
                let downstream_low = low[v + 1..].iter().any(|&l| l);
                assert_eq!(
                    s.inter_valves[v],
                    upstream_full && downstream_low,
                    "mask {mask:03b} valve {v}"
                );
            }
        }
    }

    #[test]
    fn fills_from_empty_within_bound() {
        let ctl = WaterController::default();
        let mut s = at([0, 0, 0]);
        let bound = ctl.liveness_bound(&s);
        let mut ticks = 0;
        while !s.all_at_target() {
            s = ctl.step(&s, Tick::default());
            assert!(s.is_safe());
            ticks += 1;
            assert!(ticks <= bound);
        }
        assert!(ctl.step(&s, Tick::default()).is_settled());
        assert_eq!(s.tank, TANK_CAPACITY - 3 * T as u16);
    }

    #[test]
    fn drain_closes_pump_and_returns_water() {
        // A full tank has no room, so nothing moves.
        let s = water_step(&at([T, T, 40]), Tick { drain: true });
        assert!(s.drain_valve && !s.pump);
        assert_eq!(s.containers[2], 40);
        let s = water_step(&WaterSystemState::idle(100, [T, T, 40], [T; 3]), Tick { drain: true });
        assert_eq!((s.containers[2], s.tank), (35, 105));
    }

    #[test]
    fn dry_tank_never_runs_pump() {
        let s = water_step(&WaterSystemState::idle(0, [0; 3], [T; 3]), Tick::default());
        assert!(!s.pump);
    }

    #[test]
    fn trace_has_one_row_per_state() {
        let states = simulate(&WaterController::default(), at([0, 0, 0]), 40, &[38]);
        assert_eq!(states.len(), 41);
        assert!(states[38].drain_valve && !states[38].pump);
        let csv = trace_csv(&states);
        assert_eq!(csv.lines().count(), 42);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,100.00,0,0,0,"));
    }

    #[test]
    fn small_grid_model_check() {
        let report = model_check(&WaterController { fill_rate: 50 }, &[0, 50, 100]);
        assert!(report.passed(), "{report:?}");
        assert!(report.reachable_states >= report.initial_states);
    }
}
