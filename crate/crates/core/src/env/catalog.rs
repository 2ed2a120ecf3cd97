use serde::{Deserialize, Serialize};

pub const NUM_OBJECTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: usize,
    pub name: String,
    /// Collision radius in meters.
    pub radius: f64,
    /// Mass in kilograms.
    pub mass: f64,
}

/// The fixed 15-object set.
///
/// Gymball and bowling ball radii, the cube half-edge and the board
/// half-length come from the object dimensions; the other radii are
/// bounding-disc approximations between 0.02 and 0.2 m. Masses are kept in
/// [0.1, 1.0] kg so the grip spring-damper stays stable at the default
/// timestep.
pub fn object_catalog() -> Vec<ObjectSpec> {
    const ENTRIES: [(&str, f64, f64); NUM_OBJECTS] = [
        ("gymball", 0.6, 0.8),
        ("bowling", 0.215, 1.0),
        ("cube", 0.025, 0.1),
        ("board", 0.45, 0.6),
        ("banana", 0.06, 0.12),
        ("meat_can", 0.05, 0.35),
        ("mug", 0.06, 0.25),
        ("brick", 0.08, 0.3),
        ("kettle", 0.12, 0.6),
        ("bottle", 0.07, 0.3),
        ("cup", 0.05, 0.1),
        ("bucket", 0.15, 0.5),
        ("pen", 0.02, 0.1),
        ("pot", 0.2, 0.8),
        ("scissors", 0.08, 0.1),
    ];
    ENTRIES
        .iter()
        .enumerate()
        .map(|(id, &(name, radius, mass))| ObjectSpec {
            id,
            name: name.to_string(),
            radius,
            mass,
        })
        .collect()
}

pub fn object_by_name(name: &str) -> Option<ObjectSpec> {
    object_catalog().into_iter().find(|o| o.name == name)
}
