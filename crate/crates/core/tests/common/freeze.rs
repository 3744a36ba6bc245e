//! Observer that checks frozen parameter groups byte-for-byte around every step.

use std::collections::BTreeMap;

use lmtc::model::{EncoderModel, GroupId};
use lmtc::training::{StepContext, TrainingObserver};

fn group_bytes(model: &EncoderModel<f32>, g: GroupId) -> Vec<u8> {
    model
        .group_tensors(g)
        .iter()
        .flat_map(|(_, t)| t.data.iter().flat_map(|x| x.to_le_bytes()))
        .collect()
}

#[derive(Default)]
pub struct FreezeAudit {
    before: BTreeMap<GroupId, Vec<u8>>,
    pub steps: usize,
    pub changed_frozen_bytes: usize,
    /// Steps in which at least one trainable group changed.
    pub trainable_changed_steps: usize,
}

impl TrainingObserver for FreezeAudit {
    fn before_step(&mut self, _ctx: &StepContext<'_>, model: &EncoderModel<f32>) {
        self.before = model.group_ids().into_iter().map(|g| (g, group_bytes(model, g))).collect();
    }

    fn after_step(&mut self, ctx: &StepContext<'_>, model: &EncoderModel<f32>) {
        self.steps += 1;
        let mut trainable_moved = false;
        for (g, old) in &self.before {
            let new = group_bytes(model, *g);
            let diff = old.iter().zip(&new).filter(|(a, b)| a != b).count();
            if ctx.trainable.contains(g) {
                trainable_moved |= diff > 0;
            } else {
                self.changed_frozen_bytes += diff;
            }
        }
        self.trainable_changed_steps += usize::from(trainable_moved);
    }
}
