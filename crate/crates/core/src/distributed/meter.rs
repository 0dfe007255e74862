use serde::{Deserialize, Serialize};

use super::Message;

/// Words sent and received by every endpoint in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLoad {
    pub sent: Vec<usize>,
    pub received: Vec<usize>,
    /// Extra words per endpoint had weight reports carried one word per
    /// weight class.
    pub per_class_extra: Vec<usize>,
    /// Largest `sent + received` over endpoints.
    pub max_load: usize,
    /// Largest load had weight reports carried one word per weight class.
    pub max_load_per_class_reports: usize,
}

impl RoundLoad {
    fn new(sent: Vec<usize>, received: Vec<usize>, per_class_extra: Vec<usize>) -> Self {
        let mut r = RoundLoad {
            sent,
            received,
            per_class_extra,
            max_load: 0,
            max_load_per_class_reports: 0,
        };
        r.recompute();
        r
    }

    fn recompute(&mut self) {
        let loads: Vec<usize> = self
            .sent
            .iter()
            .zip(&self.received)
            .map(|(a, b)| a + b)
            .collect();
        self.max_load = loads.iter().copied().max().unwrap_or(0);
        self.max_load_per_class_reports = loads
            .iter()
            .zip(&self.per_class_extra)
            .map(|(l, e)| l + e)
            .max()
            .unwrap_or(0);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Endpoints `0..k` are machines; a final coordinator endpoint is present
    /// unless its traffic was folded into a machine.
    pub endpoints: usize,
    pub has_coordinator: bool,
    pub rounds: Vec<RoundLoad>,
    pub max_round_load: usize,
    pub total_words: usize,
}

impl LoadReport {
    /// Attributes the coordinator's traffic to machine `host`.
    pub fn fold_coordinator_into(mut self, host: usize) -> LoadReport {
        if !self.has_coordinator {
            return self;
        }
        let c = self.endpoints - 1;
        for r in self.rounds.iter_mut() {
            let (s, v, e) = (
                r.sent.remove(c),
                r.received.remove(c),
                r.per_class_extra.remove(c),
            );
            r.sent[host] += s;
            r.received[host] += v;
            r.per_class_extra[host] += e;
            r.recompute();
        }
        self.endpoints -= 1;
        self.has_coordinator = false;
        self.max_round_load = self.rounds.iter().map(|r| r.max_load).max().unwrap_or(0);
        self
    }
}

/// Counts message words per endpoint and round.
#[derive(Debug, Clone)]
pub struct LoadMeter {
    endpoints: usize,
    rounds: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)>,
    total: usize,
}

impl LoadMeter {
    /// `endpoints` machines and coordinator; the last endpoint is the coordinator.
    pub fn new(endpoints: usize) -> Self {
        LoadMeter {
            endpoints,
            rounds: Vec::new(),
            total: 0,
        }
    }

    pub fn begin_round(&mut self) {
        let z = vec![0; self.endpoints];
        self.rounds.push((z.clone(), z.clone(), z));
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn total_words(&self) -> usize {
        self.total
    }

    pub fn send(&mut self, from: usize, to: usize, msg: &Message, solution_words: usize) {
        let w = msg.words(solution_words);
        if self.rounds.is_empty() {
            self.begin_round();
        }
        let r = self.rounds.last_mut().expect("a round is open");
        r.0[from] += w;
        r.1[to] += w;
        self.total += w;
    }

    /// Records the extra words a per-class weight report with `classes`
    /// entries would have cost the receiver `to`.
    pub fn note_per_class_report(&mut self, from: usize, to: usize, classes: usize) {
        if let Some(r) = self.rounds.last_mut() {
            let extra = classes.saturating_sub(1);
            r.2[from] += extra;
            r.2[to] += extra;
        }
    }

    pub fn report(&self) -> LoadReport {
        let rounds: Vec<RoundLoad> = self
            .rounds
            .iter()
            .map(|(s, v, e)| RoundLoad::new(s.clone(), v.clone(), e.clone()))
            .collect();
        LoadReport {
            endpoints: self.endpoints,
            has_coordinator: true,
            max_round_load: rounds.iter().map(|r| r.max_load).max().unwrap_or(0),
            total_words: self.total,
            rounds,
        }
    }
}
