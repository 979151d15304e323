//! Raw per-TTI streams and their CSV round trip.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::RunnerError;
use crate::ids::UeId;
use crate::scenario::{Mobility, Operator, UserEquipment};
use crate::scheduler::TtiReport;
use crate::units::w_to_dbm;

/// One UE in one TTI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtiRow {
    pub t_ms: u64,
    pub ue_id: u32,
    pub bits: u64,
    pub n_rbs: u16,
    pub mcs: Option<u8>,
    pub serving_bs: Option<u32>,
    /// Aggregate indoor interference at the protected UEs; empty without victims.
    pub interference_at_victims_dbm: Option<f64>,
}

/// Scheduler cost of one TTI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub t_ms: u64,
    pub pf_processed: u64,
    pub plan_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub ue_id: u32,
    pub operator: String,
    pub indoor: bool,
    pub mobility: String,
    pub victim: bool,
    pub cluster_id: Option<u32>,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl UserRow {
    pub fn from_ue(u: &UserEquipment) -> Self {
        let mobility = match u.mobility {
            Mobility::Static => "static",
            Mobility::Pedestrian { .. } => "pedestrian",
            Mobility::Trajectory(_) => "trajectory",
        };
        Self {
            ue_id: u.id.0,
            operator: match u.operator {
                Operator::Mbb => "mbb",
                Operator::Iot => "iot",
            }
            .to_string(),
            indoor: u.is_indoor(),
            mobility: mobility.to_string(),
            victim: u.victim,
            cluster_id: u.cluster_id,
            x_m: u.position.x,
            y_m: u.position.y,
            z_m: u.position.z,
        }
    }
}

/// UE sets the group rates are taken over.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserGroups {
    /// Indoor MBB users.
    pub indoor: Vec<UeId>,
    /// Everybody outside the building.
    pub outdoor: Vec<UeId>,
}

impl UserGroups {
    pub fn from_rows(users: &[UserRow]) -> Self {
        let mut g = Self::default();
        for u in users {
            if !u.indoor {
                g.outdoor.push(UeId(u.ue_id));
            } else if u.operator == "mbb" {
                g.indoor.push(UeId(u.ue_id));
            }
        }
        g
    }
}

pub fn tti_rows(report: &TtiReport) -> impl Iterator<Item = TtiRow> + '_ {
    let interference = (!report.victims.is_empty()).then(|| w_to_dbm(report.victim_interference_w()));
    report.ues.iter().map(move |u| TtiRow {
        t_ms: report.t_ms,
        ue_id: u.ue.0,
        bits: u.bits,
        n_rbs: u.n_rbs,
        mcs: u.mcs,
        serving_bs: u.serving_bs.map(|b| b.0),
        interference_at_victims_dbm: interference,
    })
}

pub fn cost_row(report: &TtiReport) -> CostRow {
    CostRow { t_ms: report.t_ms, pf_processed: report.pf_processed_total(), plan_failures: report.plan_failures() as u64 }
}

pub(crate) type CsvSink = csv::Writer<BufWriter<File>>;

pub(crate) fn create_csv(path: &Path) -> Result<CsvSink, RunnerError> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunnerError> {
    let mut w = create_csv(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RunnerError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(RunnerError::from)).collect()
}
