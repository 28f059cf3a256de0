use serde::{Deserialize, Serialize};

use super::{ActivityClass, SemanticType};

/// One value per [`SemanticType`], keyed by name in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeTable {
    pub pedestrian: f64,
    pub bicycle: f64,
    pub motorcycle: f64,
    pub car: f64,
    pub bus: f64,
}

impl TypeTable {
    pub fn get(&self, t: SemanticType) -> f64 {
        match t {
            SemanticType::Pedestrian => self.pedestrian,
            SemanticType::Bicycle => self.bicycle,
            SemanticType::Motorcycle => self.motorcycle,
            SemanticType::Car => self.car,
            SemanticType::Bus => self.bus,
        }
    }

    pub fn values(&self) -> [f64; SemanticType::COUNT] {
        SemanticType::ALL.map(|t| self.get(t))
    }
}

/// One value per [`ActivityClass`], keyed by name in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityTable {
    pub standing: f64,
    pub walking: f64,
    pub running: f64,
    pub talking: f64,
    pub carrying: f64,
    pub crossing: f64,
    pub turning: f64,
    pub stopping: f64,
}

impl ActivityTable {
    pub fn get(&self, a: ActivityClass) -> f64 {
        match a {
            ActivityClass::Standing => self.standing,
            ActivityClass::Walking => self.walking,
            ActivityClass::Running => self.running,
            ActivityClass::Talking => self.talking,
            ActivityClass::Carrying => self.carrying,
            ActivityClass::Crossing => self.crossing,
            ActivityClass::Turning => self.turning,
            ActivityClass::Stopping => self.stopping,
        }
    }

    pub fn values(&self) -> [f64; ActivityClass::COUNT] {
        ActivityClass::ALL.map(|a| self.get(a))
    }

    pub fn from_values(v: [f64; ActivityClass::COUNT]) -> Self {
        Self {
            standing: v[0],
            walking: v[1],
            running: v[2],
            talking: v[3],
            carrying: v[4],
            crossing: v[5],
            turning: v[6],
            stopping: v[7],
        }
    }
}
