//! JSON documents for instances and schedules.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{FlightPlan, Instance, Schedule, Sector};
use crate::error::{Error, Result};
use crate::timeprob::TimeGrid;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct InstanceDocument {
    format: u32,
    grid: TimeGrid,
    flights: Vec<FlightPlan>,
    sectors: Vec<Sector>,
}

impl Serialize for Instance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceDocument {
            format: FORMAT_VERSION,
            grid: self.grid,
            flights: self.flights.clone(),
            sectors: self.sectors.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = InstanceDocument::deserialize(deserializer)?;
        if doc.format != FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported instance format {} (expected {FORMAT_VERSION})",
                doc.format
            )));
        }
        Instance::new(doc.grid, doc.flights, doc.sectors).map_err(serde::de::Error::custom)
    }
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("instance document: {e}")))
    }
}

/// Hex SHA-256 of the instance's compact serialization.
pub fn instance_checksum(inst: &Instance) -> String {
    let bytes = serde_json::to_vec(inst).expect("instance serialization cannot fail");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A schedule bound to the instance it was produced for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub format: u32,
    pub instance_checksum: String,
    pub gamma: Schedule,
}

impl ScheduleDocument {
    pub fn new(inst: &Instance, gamma: Schedule) -> Self {
        Self { format: FORMAT_VERSION, instance_checksum: instance_checksum(inst), gamma }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }

    /// Parses a schedule and checks that it targets `inst`.
    pub fn from_json(text: &str, inst: &Instance) -> Result<Schedule> {
        let doc: ScheduleDocument =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("schedule document: {e}")))?;
        if doc.format != FORMAT_VERSION {
            return Err(Error::Invalid(format!("unsupported schedule format {}", doc.format)));
        }
        let expected = instance_checksum(inst);
        if doc.instance_checksum != expected {
            return Err(Error::Invalid(format!(
                "schedule targets instance {} but {} was given",
                doc.instance_checksum, expected
            )));
        }
        if doc.gamma.len() != inst.dimension() {
            return Err(Error::Invalid(format!(
                "schedule has {} targets, instance needs {}",
                doc.gamma.len(),
                inst.dimension()
            )));
        }
        Ok(doc.gamma)
    }
}
