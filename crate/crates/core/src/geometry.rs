//! Planar positions and the velocities derived from them.

use std::ops::Sub;

use serde::{Deserialize, Serialize};

/// A detection position in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn squared_distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Velocity of an object moving from `self` to `next` over `dt`.
    pub fn velocity_to(&self, next: &Position, dt: f64) -> Velocity {
        Velocity {
            vx: (next.x - self.x) / dt,
            vy: (next.y - self.y) / dt,
        }
    }
}

impl From<(f64, f64)> for Position {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Velocity in pixels per frame interval. Only ever obtained from a pair of
/// positions via [`Position::velocity_to`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { vx: 0.0, vy: 0.0 };

    pub fn norm_squared(&self) -> f64 {
        self.vx * self.vx + self.vy * self.vy
    }
}

impl Sub for Velocity {
    type Output = Velocity;

    fn sub(self, rhs: Velocity) -> Velocity {
        Velocity {
            vx: self.vx - rhs.vx,
            vy: self.vy - rhs.vy,
        }
    }
}
