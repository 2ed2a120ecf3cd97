use serde::{Deserialize, Serialize};

use super::catalog::ObjectSpec;
use super::vec2::Vec2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectState<T> {
    pub position: Vec2<T>,
    pub velocity: Vec2<T>,
    pub angle: T,
    pub angular_velocity: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PalmState<T> {
    pub position: Vec2<T>,
    pub velocity: Vec2<T>,
    pub grip: T,
}

/// Full simulator state, also the centralized critic's input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState<T> {
    pub object: ObjectState<T>,
    pub palms: [PalmState<T>; 2],
    pub t: u64,
    pub active_object: usize,
    pub thrown: bool,
    /// Radius and mass of the active object, cached from the catalog.
    pub object_radius: T,
    pub object_mass: T,
}

impl<T: Scalar> WorldState<T> {
    pub fn new(object: &ObjectSpec, position: Vec2<T>, palm_home: [Vec2<T>; 2]) -> Self {
        WorldState {
            object: ObjectState {
                position,
                velocity: Vec2::zero(),
                angle: T::zero(),
                angular_velocity: T::zero(),
            },
            palms: palm_home.map(|p| PalmState {
                position: p,
                velocity: Vec2::zero(),
                grip: T::zero(),
            }),
            t: 0,
            active_object: object.id,
            thrown: false,
            object_radius: T::lit(object.radius),
            object_mass: T::lit(object.mass),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        let o = &self.object;
        let ok = o.position.is_finite()
            && o.velocity.is_finite()
            && o.angle.is_finite()
            && o.angular_velocity.is_finite()
            && self
                .palms
                .iter()
                .all(|p| p.position.is_finite() && p.velocity.is_finite() && p.grip.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("world state at t = {}", self.t)))
        }
    }

    pub fn palm_object_distance(&self, palm: usize) -> T {
        self.palms[palm].position.dist(self.object.position)
    }

    /// True when the palm disc touches the object disc.
    pub fn in_contact(&self, palm: usize, palm_radius: T) -> bool {
        self.palm_object_distance(palm) <= self.object_radius + palm_radius
    }
}
