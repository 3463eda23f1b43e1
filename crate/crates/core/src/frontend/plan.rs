use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::design::{
    default_receive_block, default_transmit_exponents, design_receive_step, design_transmit_stage,
    ReceiveBlock, ReceiveStepDesign, TransmitStageDesign,
};
use super::pattern::SamplingPattern;
use super::shifter::PhaseShifterSet;
use crate::error::{Error, Result};

/// Hardware and budget parameters of the training phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub k_t: usize,
    pub k_r: usize,
    pub bits: u32,
    /// Number of stages `M`.
    pub stages: usize,
    /// Receive steps per stage `S`.
    pub steps_per_stage: usize,
    #[serde(default)]
    pub transmit_exponents: Option<(usize, usize)>,
    #[serde(default)]
    pub receive_block: Option<ReceiveBlock>,
}

impl PlanConfig {
    /// Rows that fit in one column: visits times steps times `K_r - 1`.
    pub fn column_capacity(&self, n_t: usize) -> usize {
        let visits = self.stages / n_t.max(1);
        visits * self.steps_per_stage * self.k_r.saturating_sub(1)
    }
}

/// Where one sampled entry is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSlot {
    pub row: usize,
    pub col: usize,
    pub stage: usize,
    pub step: usize,
    /// Offset within the stage's stacked received vector.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPlan {
    pub n_t: usize,
    pub n_r: usize,
    pub k_t: usize,
    pub k_r: usize,
    pub shifter: PhaseShifterSet,
    pub transmit_exponents: (usize, usize),
    pub receive_block: ReceiveBlock,
    pub pattern: SamplingPattern,
    /// 0-based target column of each stage.
    pub targets: Vec<usize>,
    /// `row_sets[m][s]` are the rows read at step `s` of stage `m`.
    pub row_sets: Vec<Vec<Vec<usize>>>,
    pub slots: Vec<SampleSlot>,
    lookup: HashMap<(usize, usize), usize>,
}

/// Stage `m` (1-based) sounds column `(m mod N_t) + 1`; returned 0-based.
pub fn stage_target(stage: usize, n_t: usize) -> usize {
    (stage + 1) % n_t
}

pub fn assemble_training_plan(pattern: &SamplingPattern, cfg: &PlanConfig) -> Result<TrainingPlan> {
    let (n_t, n_r) = (pattern.n_t, pattern.n_r);
    let shifter = PhaseShifterSet::new(cfg.bits)?;
    if cfg.k_r < 2 || cfg.k_t < 2 {
        return Err(Error::Plan("K_t and K_r must both be at least 2".into()));
    }
    if cfg.stages < n_t {
        return Err(Error::Plan(format!(
            "{} stages cannot visit all {n_t} columns",
            cfg.stages
        )));
    }
    if cfg.steps_per_stage == 0 {
        return Err(Error::Plan("need at least one step per stage".into()));
    }
    let transmit_exponents = cfg
        .transmit_exponents
        .unwrap_or_else(|| default_transmit_exponents(&shifter, cfg.k_t));
    let receive_block = match &cfg.receive_block {
        Some(b) => b.clone(),
        None => default_receive_block(&shifter, cfg.k_r)?,
    };

    let targets: Vec<usize> = (0..cfg.stages).map(|m| stage_target(m, n_t)).collect();
    let mut visits: Vec<Vec<usize>> = vec![Vec::new(); n_t];
    for (m, &j) in targets.iter().enumerate() {
        visits[j].push(m);
    }

    let chunk = cfg.k_r - 1;
    let mut row_sets = vec![vec![Vec::new(); cfg.steps_per_stage]; cfg.stages];
    for (j, rows) in pattern.rows.iter().enumerate() {
        let capacity = visits[j].len() * cfg.steps_per_stage * chunk;
        if rows.len() > capacity {
            return Err(Error::Plan(format!(
                "column {j} has {} samples but only {capacity} slots",
                rows.len()
            )));
        }
        for (c, group) in rows.chunks(chunk).enumerate() {
            let stage = visits[j][c / cfg.steps_per_stage];
            row_sets[stage][c % cfg.steps_per_stage] = group.to_vec();
        }
    }

    let mut slots = Vec::with_capacity(pattern.len());
    let mut lookup = HashMap::with_capacity(pattern.len());
    for (m, steps) in row_sets.iter().enumerate() {
        let mut offset = 0;
        for (s, rows) in steps.iter().enumerate() {
            for &row in rows {
                lookup.insert((row, targets[m]), slots.len());
                slots.push(SampleSlot {
                    row,
                    col: targets[m],
                    stage: m,
                    step: s,
                    offset,
                });
                offset += 1;
            }
        }
    }

    Ok(TrainingPlan {
        n_t,
        n_r,
        k_t: cfg.k_t,
        k_r: cfg.k_r,
        shifter,
        transmit_exponents,
        receive_block,
        pattern: pattern.clone(),
        targets,
        row_sets,
        slots,
        lookup,
    })
}

impl TrainingPlan {
    pub fn stages(&self) -> usize {
        self.targets.len()
    }

    pub fn steps_per_stage(&self) -> usize {
        self.row_sets.first().map_or(0, Vec::len)
    }

    pub fn total_steps(&self) -> usize {
        self.stages() * self.steps_per_stage()
    }

    pub fn sample_count(&self) -> usize {
        self.slots.len()
    }

    /// Length of the stacked received vector of stage `m`.
    pub fn stage_len(&self, m: usize) -> usize {
        self.row_sets[m].iter().map(Vec::len).sum()
    }

    pub fn slot(&self, row: usize, col: usize) -> Option<&SampleSlot> {
        self.lookup.get(&(row, col)).map(|&k| &self.slots[k])
    }

    pub fn stage_design(&self, m: usize) -> Result<TransmitStageDesign> {
        let (n1, n2) = self.transmit_exponents;
        design_transmit_stage(self.targets[m], self.n_t, self.k_t, &self.shifter, n1, n2)
    }

    pub fn step_design(&self, m: usize, s: usize) -> Result<ReceiveStepDesign> {
        design_receive_step(
            &self.row_sets[m][s],
            self.n_r,
            self.k_r,
            &self.shifter,
            &self.receive_block,
        )
    }
}
