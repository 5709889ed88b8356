//! Seeded traffic generators and channel-quality processes.
//!
//! Every UE draws from its own substreams derived from `(run_seed, ue_id)`,
//! so adding or removing a UE leaves every other UE's sequences untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::grid::{MAX_CQI, MIN_CQI};
use crate::model::{UeConfig, UeId};
use crate::stack::Sdu;

const fn default_pkt_bits() -> u64 {
    320
}
const fn default_voip_period() -> u32 {
    20
}
const fn default_frame_period() -> u32 {
    33
}
const fn default_min_cqi() -> u8 {
    MIN_CQI
}
const fn default_max_cqi() -> u8 {
    MAX_CQI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum TrafficModel {
    /// Talk-spurt source: exponential ON/OFF dwell, one packet per period while ON.
    Voip {
        on_mean_s: f64,
        off_mean_s: f64,
        #[serde(default = "default_pkt_bits")]
        pkt_bits: u64,
        #[serde(default = "default_voip_period")]
        period_ttis: u32,
    },
    /// One frame of `rate_bps * frame_period` bits every frame period.
    CbrVideo {
        rate_bps: u64,
        #[serde(default = "default_frame_period")]
        frame_period_ttis: u32,
    },
    /// Keeps the UE's backlog topped up to a target.
    FullBuffer { target_backlog_bits: u64 },
}

impl TrafficModel {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            TrafficModel::Voip {
                on_mean_s,
                off_mean_s,
                pkt_bits,
                period_ttis,
            } => {
                if !(on_mean_s.is_finite() && on_mean_s > 0.0) {
                    out.push(format!("on_mean_s must be positive, got {on_mean_s}"));
                }
                if !(off_mean_s.is_finite() && off_mean_s > 0.0) {
                    out.push(format!("off_mean_s must be positive, got {off_mean_s}"));
                }
                if pkt_bits == 0 {
                    out.push("pkt_bits must be positive".into());
                }
                if period_ttis == 0 {
                    out.push("period_ttis must be positive".into());
                }
            }
            TrafficModel::CbrVideo {
                rate_bps,
                frame_period_ttis,
            } => {
                if rate_bps == 0 {
                    out.push("rate_bps must be positive".into());
                }
                if frame_period_ttis == 0 {
                    out.push("frame_period_ttis must be positive".into());
                }
            }
            TrafficModel::FullBuffer {
                target_backlog_bits,
            } => {
                if target_backlog_bits == 0 {
                    out.push("target_backlog_bits must be positive".into());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum CqiModel {
    Fixed {
        cqi: u8,
    },
    /// Moves one step up or down with equal probability every
    /// `step_period_ttis`, clamped to `[min, max]`.
    RandomWalk {
        start_cqi: u8,
        step_period_ttis: u32,
        #[serde(default = "default_min_cqi")]
        min: u8,
        #[serde(default = "default_max_cqi")]
        max: u8,
    },
}

impl CqiModel {
    pub(crate) fn violations(&self) -> Vec<String> {
        let in_range = |c: u8| (MIN_CQI..=MAX_CQI).contains(&c);
        let mut out = Vec::new();
        match *self {
            CqiModel::Fixed { cqi } => {
                if !in_range(cqi) {
                    out.push(format!("cqi {cqi} outside 1..=15"));
                }
            }
            CqiModel::RandomWalk {
                start_cqi,
                step_period_ttis,
                min,
                max,
            } => {
                if !in_range(min) || !in_range(max) || min > max {
                    out.push(format!("cqi bounds [{min}, {max}] must lie within 1..=15"));
                } else if !(min..=max).contains(&start_cqi) {
                    out.push(format!("start_cqi {start_cqi} outside [{min}, {max}]"));
                }
                if step_period_ttis == 0 {
                    out.push("step_period_ttis must be positive".into());
                }
            }
        }
        out
    }
}

const TRAFFIC_STREAM: u64 = 0x7452_4146_4649_4331;
const CHANNEL_STREAM: u64 = 0x4348_414e_4e45_4c32;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent RNG substream for one UE.
pub fn substream(run_seed: u64, ue: UeId, stream: u64) -> ChaCha8Rng {
    let seed = splitmix64(splitmix64(run_seed) ^ splitmix64(u64::from(ue.0) ^ stream));
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponential dwell time discretized to whole TTIs, at least one.
fn dwell_ttis(rng: &mut ChaCha8Rng, mean_s: f64) -> u64 {
    let exp = Exp::new(1.0 / mean_s).expect("mean validated positive");
    let seconds: f64 = exp.sample(rng);
    ((seconds * 1000.0).round() as u64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VoipPhase {
    Idle,
    On { since: u64, until: u64 },
    Off { until: u64 },
}

/// Per-UE traffic generator.
#[derive(Debug, Clone)]
pub struct TrafficSource {
    ue: UeId,
    model: TrafficModel,
    start_tti: u64,
    stop_tti: Option<u64>,
    phase: VoipPhase,
    rng: ChaCha8Rng,
}

impl TrafficSource {
    pub fn new(cfg: &UeConfig, run_seed: u64) -> Self {
        Self {
            ue: cfg.id,
            model: cfg.traffic,
            start_tti: cfg.start_tti,
            stop_tti: cfg.stop_tti,
            phase: VoipPhase::Idle,
            rng: substream(run_seed, cfg.id, TRAFFIC_STREAM),
        }
    }

    pub fn model(&self) -> &TrafficModel {
        &self.model
    }

    fn active(&self, tti: u64) -> bool {
        tti >= self.start_tti && self.stop_tti.is_none_or(|stop| tti < stop)
    }

    /// Whether a VoIP source is in a talk-spurt at the last TTI it was
    /// advanced to.
    pub fn is_on(&self) -> bool {
        matches!(self.phase, VoipPhase::On { .. })
    }

    /// SDUs generated at `tti`. Call once per TTI in increasing TTI order;
    /// `backlog_bits` is the UE's current MAC backlog.
    pub fn arrivals(&mut self, tti: u64, backlog_bits: u64) -> Vec<Sdu> {
        if !self.active(tti) {
            return Vec::new();
        }
        let sdu = |size_bits| Sdu {
            ue: self.ue,
            size_bits,
            arrival_tti: tti,
        };
        let since_start = tti - self.start_tti;
        match self.model {
            TrafficModel::Voip {
                on_mean_s,
                off_mean_s,
                pkt_bits,
                period_ttis,
            } => {
                if self.phase == VoipPhase::Idle {
                    // a call opens with a talk-spurt
                    self.phase = VoipPhase::On {
                        since: tti,
                        until: tti + dwell_ttis(&mut self.rng, on_mean_s),
                    };
                }
                loop {
                    match self.phase {
                        VoipPhase::On { until, .. } if tti >= until => {
                            self.phase = VoipPhase::Off {
                                until: until + dwell_ttis(&mut self.rng, off_mean_s),
                            };
                        }
                        VoipPhase::Off { until } if tti >= until => {
                            self.phase = VoipPhase::On {
                                since: until,
                                until: until + dwell_ttis(&mut self.rng, on_mean_s),
                            };
                        }
                        _ => break,
                    }
                }
                match self.phase {
                    VoipPhase::On { since, .. }
                        if (tti - since).is_multiple_of(u64::from(period_ttis)) =>
                    {
                        vec![sdu(pkt_bits)]
                    }
                    _ => Vec::new(),
                }
            }
            TrafficModel::CbrVideo {
                rate_bps,
                frame_period_ttis,
            } => {
                if since_start.is_multiple_of(u64::from(frame_period_ttis)) {
                    let bits = (rate_bps as f64 * f64::from(frame_period_ttis) / 1000.0).round();
                    vec![sdu(bits as u64)]
                } else {
                    Vec::new()
                }
            }
            TrafficModel::FullBuffer {
                target_backlog_bits,
            } => {
                if backlog_bits < target_backlog_bits {
                    vec![sdu(target_backlog_bits - backlog_bits)]
                } else {
                    Vec::new()
                }
            }
        }
    }
}

/// Per-UE channel quality process.
#[derive(Debug, Clone)]
pub struct CqiProcess {
    model: CqiModel,
    current: u8,
    next_step: u64,
    rng: ChaCha8Rng,
}

impl CqiProcess {
    pub fn new(model: CqiModel, ue: UeId, run_seed: u64) -> Self {
        let (current, next_step) = match model {
            CqiModel::Fixed { cqi } => (cqi, u64::MAX),
            CqiModel::RandomWalk {
                start_cqi,
                step_period_ttis,
                ..
            } => (start_cqi, u64::from(step_period_ttis)),
        };
        Self {
            model,
            current,
            next_step,
            rng: substream(run_seed, ue, CHANNEL_STREAM),
        }
    }

    /// CQI in effect at `tti`. Repeated calls for the same TTI return the same
    /// value; TTIs must not go backwards.
    pub fn cqi_at(&mut self, tti: u64) -> u8 {
        if let CqiModel::RandomWalk {
            step_period_ttis,
            min,
            max,
            ..
        } = self.model
        {
            let step = u64::from(step_period_ttis);
            while self.next_step <= tti {
                let up: bool = self.rng.random();
                self.current = if up {
                    (self.current + 1).min(max)
                } else {
                    self.current.saturating_sub(1).max(min)
                };
                self.next_step += step;
            }
        }
        self.current
    }
}

pub fn channel_for(cfg: &UeConfig, run_seed: u64) -> CqiProcess {
    CqiProcess::new(cfg.channel, cfg.id, run_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SubsliceId, TenantId};

    fn ue(id: u32, traffic: TrafficModel) -> UeConfig {
        UeConfig {
            id: UeId(id),
            tenant: TenantId(1),
            subslice: SubsliceId(1),
            traffic,
            channel: CqiModel::Fixed { cqi: 7 },
            start_tti: 0,
            stop_tti: None,
        }
    }

    fn voip(on: f64, off: f64) -> TrafficModel {
        TrafficModel::Voip {
            on_mean_s: on,
            off_mean_s: off,
            pkt_bits: 320,
            period_ttis: 20,
        }
    }

    #[test]
    fn cbr_video_frame_size() {
        let mut src = TrafficSource::new(
            &ue(
                1,
                TrafficModel::CbrVideo {
                    rate_bps: 3_000_000,
                    frame_period_ttis: 33,
                },
            ),
            5,
        );
        // 3e6 * 0.033
        assert_eq!(src.arrivals(0, 0)[0].size_bits, 99_000);
        for t in 1..33 {
            assert!(src.arrivals(t, 0).is_empty());
        }
        assert_eq!(src.arrivals(33, 0).len(), 1);
    }

    #[test]
    fn full_buffer_tops_up() {
        let mut src = TrafficSource::new(
            &ue(
                1,
                TrafficModel::FullBuffer {
                    target_backlog_bits: 1_000_000,
                },
            ),
            5,
        );
        assert!(src.arrivals(0, 1_000_000).is_empty());
        assert_eq!(src.arrivals(1, 400_000)[0].size_bits, 600_000);
        assert_eq!(src.arrivals(2, 0)[0].size_bits, 1_000_000);
    }

    #[test]
    fn voip_off_state_is_silent() {
        let mut src = TrafficSource::new(&ue(3, voip(0.05, 0.5)), 9);
        let mut saw_off = false;
        for t in 0..20_000 {
            let out = src.arrivals(t, 0);
            if !src.is_on() {
                saw_off = true;
                assert!(out.is_empty(), "packet while off at tti {t}");
            }
        }
        assert!(saw_off);
    }

    #[test]
    fn voip_packets_follow_period_within_spurt() {
        let mut src = TrafficSource::new(&ue(3, voip(1000.0, 1.0)), 9);
        let ttis: Vec<u64> = (0..200)
            .filter(|&t| !src.arrivals(t, 0).is_empty())
            .collect();
        assert_eq!(ttis, (0..10).map(|k| k * 20).collect::<Vec<_>>());
    }

    #[test]
    fn voip_duty_cycle_converges_to_half() {
        let mut src = TrafficSource::new(&ue(11, voip(0.1, 0.1)), 2024);
        let total = 1_000_000u64;
        let mut on_ttis = 0u64;
        let mut bits = 0u64;
        for t in 0..total {
            bits += src.arrivals(t, 0).iter().map(|s| s.size_bits).sum::<u64>();
            if src.is_on() {
                on_ttis += 1;
            }
        }
        let duty = on_ttis as f64 / total as f64;
        assert!((duty - 0.5).abs() <= 0.025, "duty {duty}");
        // every spurt opens with a packet: a spurt of L TTIs carries
        // ceil(L/20) packets, and for exponential L with mean 100,
        // E[ceil(L/20)] = 1 / (1 - e^{-20/100})
        let packets_per_spurt = 1.0 / (1.0 - (-0.2f64).exp());
        let expected = 320.0 * packets_per_spurt / 200.0;
        let rate = bits as f64 / total as f64;
        assert!(
            (rate / expected - 1.0).abs() <= 0.03,
            "rate {rate} vs {expected}"
        );
    }

    #[test]
    fn activity_window_gates_arrivals() {
        let mut cfg = ue(
            1,
            TrafficModel::FullBuffer {
                target_backlog_bits: 10,
            },
        );
        cfg.start_tti = 5;
        cfg.stop_tti = Some(8);
        let mut src = TrafficSource::new(&cfg, 1);
        let active: Vec<u64> = (0..12)
            .filter(|&t| !src.arrivals(t, 0).is_empty())
            .collect();
        assert_eq!(active, vec![5, 6, 7]);
    }

    #[test]
    fn sequences_are_reproducible_and_isolated_per_ue() {
        let trace = |seed: u64, id: u32| {
            let mut src = TrafficSource::new(&ue(id, voip(0.02, 0.02)), seed);
            (0..5000)
                .map(|t| src.arrivals(t, 0).len())
                .collect::<Vec<_>>()
        };
        assert_eq!(trace(7, 1), trace(7, 1));
        assert_ne!(trace(7, 1), trace(8, 1));
        assert_ne!(trace(7, 1), trace(7, 2));
    }

    #[test]
    fn fixed_cqi_is_constant() {
        let mut p = CqiProcess::new(CqiModel::Fixed { cqi: 11 }, UeId(1), 3);
        assert!((0..100).all(|t| p.cqi_at(t) == 11));
    }

    #[test]
    fn random_walk_clamps_and_holds() {
        let model = CqiModel::RandomWalk {
            start_cqi: 15,
            step_period_ttis: 10,
            min: 1,
            max: 15,
        };
        let mut p = CqiProcess::new(model, UeId(4), 3);
        let values: Vec<u8> = (0..5000).map(|t| p.cqi_at(t)).collect();
        assert!(values.iter().all(|c| (1..=15).contains(c)));
        for (t, w) in values.windows(2).enumerate() {
            let next = t as u64 + 1;
            if !next.is_multiple_of(10) {
                assert_eq!(w[0], w[1], "changed off-boundary at {next}");
            } else {
                assert!(w[0].abs_diff(w[1]) <= 1);
            }
        }
        // at max, an up-step stays put
        let mut stays_at_max = false;
        for t in (10..5000).step_by(10) {
            let prev = values[t - 1];
            if prev == 15 && values[t] == 15 {
                stays_at_max = true;
            }
        }
        assert!(stays_at_max);
    }

    #[test]
    fn cqi_same_tti_twice_is_identical() {
        let model = CqiModel::RandomWalk {
            start_cqi: 7,
            step_period_ttis: 1,
            min: 1,
            max: 15,
        };
        let mut a = CqiProcess::new(model, UeId(9), 42);
        let mut b = CqiProcess::new(model, UeId(9), 42);
        for t in 0..300 {
            let x = a.cqi_at(t);
            assert_eq!(x, a.cqi_at(t));
            assert_eq!(x, b.cqi_at(t));
        }
    }

    #[test]
    fn validation_messages() {
        assert_eq!(voip(0.0, 1.0).violations().len(), 1);
        assert!(CqiModel::Fixed { cqi: 16 }.violations()[0].contains("16"));
        assert!(
            CqiModel::RandomWalk {
                start_cqi: 3,
                step_period_ttis: 0,
                min: 4,
                max: 9
            }
            .violations()
            .len()
                == 2
        );
    }
}
