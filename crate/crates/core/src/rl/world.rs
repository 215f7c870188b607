use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::RngStream;

pub const NUM_EYES: usize = 9;
pub const NUM_CHANNELS: usize = 3;
pub const OBS_DIM: usize = NUM_EYES * NUM_CHANNELS;
pub const NUM_ACTIONS: usize = 5;

/// Geometry, motors and reward coefficients of the foraging world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
    pub num_items: usize,
    pub item_radius: f64,
    pub agent_radius: f64,
    pub eye_range: f64,
    /// Eyes are spread evenly over `±eye_fan_deg` around the heading.
    pub eye_fan_deg: f64,
    /// `(left, right)` motor speeds for hard-left, left, straight, right, hard-right.
    pub motors: [(f64, f64); NUM_ACTIONS],
    /// Heading change per unit of motor difference, in radians.
    pub turn_gain: f64,
    pub red_reward: f64,
    pub green_reward: f64,
    pub forward_bonus: f64,
    /// Largest penalty for looking at walls, applied in proportion to the
    /// mean wall intensity over all eyes.
    pub wall_penalty: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            width: 700.0,
            height: 500.0,
            num_items: 50,
            item_radius: 10.0,
            agent_radius: 10.0,
            eye_range: 85.0,
            eye_fan_deg: 34.0,
            motors: [(0.5, 2.5), (2.0, 3.0), (3.0, 3.0), (3.0, 2.0), (2.5, 0.5)],
            turn_gain: 0.15,
            red_reward: 1.0,
            green_reward: -1.0,
            forward_bonus: 0.05,
            wall_penalty: 0.05,
        }
    }
}

pub const STRAIGHT: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Red,
    Green,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub x: f64,
    pub y: f64,
    pub kind: ItemKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Radians; the agent faces `(cos, sin)`.
    pub heading: f64,
}

/// 9 eyes × (red, green, wall); each value is `1 − distance / range` for
/// the nearest thing an eye sees and 0 for the other channels.
pub type Observation = Vec<f64>;

/// The arena: its boundary is the only wall.
#[derive(Clone, Debug)]
pub struct World {
    pub config: WorldConfig,
    pub agent: AgentState,
    pub items: Vec<Item>,
    rng: RngStream,
}

/// Distance along a unit ray from `(ox, oy)` to a circle, if hit within `max`.
fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64, max: f64) -> Option<f64> {
    let (fx, fy) = (ox - cx, oy - cy);
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - r * r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= 0.0 && t <= max).then_some(t)
}

impl World {
    pub fn new(config: WorldConfig, rng: RngStream) -> Self {
        let mut w = World {
            agent: AgentState {
                x: config.width / 2.0,
                y: config.height / 2.0,
                heading: 0.0,
            },
            items: Vec::with_capacity(config.num_items),
            config,
            rng,
        };
        for i in 0..w.config.num_items {
            let kind = if i % 2 == 0 { ItemKind::Red } else { ItemKind::Green };
            let item = w.random_item(kind);
            w.items.push(item);
        }
        w
    }

    /// A world with no items, for controlled tests.
    pub fn empty(config: WorldConfig, rng: RngStream) -> Self {
        let mut w = World::new(WorldConfig { num_items: 0, ..config.clone() }, rng);
        w.config = config;
        w
    }

    fn random_item(&mut self, kind: ItemKind) -> Item {
        let c = &self.config;
        let margin = c.item_radius;
        loop {
            let x = self.rng.uniform_range(margin, c.width - margin);
            let y = self.rng.uniform_range(margin, c.height - margin);
            let (dx, dy) = (x - self.agent.x, y - self.agent.y);
            // never respawn on top of the agent
            if dx * dx + dy * dy > (3.0 * (c.agent_radius + c.item_radius)).powi(2) {
                return Item { x, y, kind };
            }
        }
    }

    fn eye_angles(&self) -> impl Iterator<Item = f64> + '_ {
        let fan = self.config.eye_fan_deg.to_radians();
        (0..NUM_EYES).map(move |k| self.agent.heading - fan + 2.0 * fan * k as f64 / (NUM_EYES - 1) as f64)
    }

    pub fn observe(&self) -> Observation {
        let c = &self.config;
        let a = &self.agent;
        let mut obs = vec![0.0; OBS_DIM];
        for (e, angle) in self.eye_angles().enumerate() {
            let (dy, dx) = angle.sin_cos();
            let mut best = (c.eye_range, None);
            // boundary walls
            let wall_hits = [
                (dx < 0.0).then(|| -a.x / dx),
                (dx > 0.0).then(|| (c.width - a.x) / dx),
                (dy < 0.0).then(|| -a.y / dy),
                (dy > 0.0).then(|| (c.height - a.y) / dy),
            ];
            for t in wall_hits.into_iter().flatten() {
                if t < best.0 {
                    best = (t, Some(2));
                }
            }
            for item in &self.items {
                if let Some(t) = ray_circle(a.x, a.y, dx, dy, item.x, item.y, c.item_radius, c.eye_range) {
                    if t < best.0 {
                        best = (t, Some(if item.kind == ItemKind::Red { 0 } else { 1 }));
                    }
                }
            }
            if let (t, Some(ch)) = best {
                obs[e * NUM_CHANNELS + ch] = (1.0 - t / c.eye_range).clamp(0.0, 1.0);
            }
        }
        obs
    }

    /// Applies `action`, collects items and returns the reward and the new
    /// observation. Moves that would leave the arena are cancelled; turning
    /// still happens.
    pub fn step(&mut self, action: usize) -> (f64, Observation) {
        let c = self.config.clone();
        let (l, r) = c.motors[action.min(NUM_ACTIONS - 1)];
        let a = &mut self.agent;
        a.heading = (a.heading + c.turn_gain * (r - l)).rem_euclid(2.0 * PI);
        let speed = 0.5 * (l + r);
        let nx = a.x + speed * a.heading.cos();
        let ny = a.y + speed * a.heading.sin();
        let rad = c.agent_radius;
        if nx >= rad && nx <= c.width - rad && ny >= rad && ny <= c.height - rad {
            a.x = nx;
            a.y = ny;
        }

        let mut reward = 0.0;
        let reach = (c.agent_radius + c.item_radius).powi(2);
        for i in 0..self.items.len() {
            let it = self.items[i];
            let (dx, dy) = (it.x - self.agent.x, it.y - self.agent.y);
            if dx * dx + dy * dy <= reach {
                reward += match it.kind {
                    ItemKind::Red => c.red_reward,
                    ItemKind::Green => c.green_reward,
                };
                self.items[i] = self.random_item(it.kind);
            }
        }
        if action == STRAIGHT {
            reward += c.forward_bonus;
        }
        let obs = self.observe();
        let wall: f64 = (0..NUM_EYES).map(|e| obs[e * NUM_CHANNELS + 2]).sum::<f64>() / NUM_EYES as f64;
        reward -= c.wall_penalty * wall;
        (reward, obs)
    }
}
