//! Machine-readable staged reports emitted by the command-line front end.

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct StageRecord {
    pub name: String,
    pub ok: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<serde_json::Value>,
}

impl StageRecord {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        StageRecord {
            name: name.into(),
            ok,
            detail: detail.into(),
            effective_order: None,
            certificate: None,
        }
    }

    pub fn with_order(mut self, order: Option<u32>) -> Self {
        self.effective_order = order;
        self
    }

    pub fn with_certificate(mut self, value: serde_json::Value) -> Self {
        self.certificate = Some(value);
        self
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub order: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, order: u32) -> Self {
        Report {
            command: command.into(),
            status: Status::Pass,
            order,
            seed: None,
            stages: Vec::new(),
            error: None,
            result: None,
        }
    }

    pub fn push(&mut self, stage: StageRecord) {
        if !stage.ok && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self.stages.push(stage);
    }

    pub fn set_error(&mut self, e: &Error, stage: Option<&str>) {
        self.status = Status::Error;
        self.error = Some(ErrorRecord {
            kind: e.kind().into(),
            message: e.to_string(),
            stage: stage.map(Into::into),
        });
    }

    pub fn finish_status(&mut self) {
        if self.error.is_some() {
            self.status = Status::Error;
        } else if self.stages.iter().any(|s| !s.ok) {
            self.status = Status::Fail;
        }
    }

    /// Canonical JSON bytes.
    pub fn to_json(&self) -> String {
        crate::schema::to_canonical_json(self)
    }

    /// Lossy human-readable summary: the status line, one line per stage,
    /// and the first offending certificate when the report fails.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{}: {}\n",
            self.command,
            match self.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Error => "error",
            }
        ));
        out.push_str(&format!("order: {}\n", self.order));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed: {seed}\n"));
        }
        for s in &self.stages {
            let mark = if s.ok { "ok " } else { "FAIL" };
            match s.effective_order {
                Some(o) => out.push_str(&format!(
                    "  [{mark}] {} (order {o}): {}\n",
                    s.name, s.detail
                )),
                None => out.push_str(&format!("  [{mark}] {}: {}\n", s.name, s.detail)),
            }
        }
        if let Some(first) = self.stages.iter().find(|s| !s.ok) {
            if let Some(cert) = &first.certificate {
                out.push_str(&format!("first certificate ({}): {}\n", first.name, cert));
            }
        }
        if let Some(err) = &self.error {
            match &err.stage {
                Some(st) => out.push_str(&format!(
                    "error[{}] at {}: {}\n",
                    err.kind, st, err.message
                )),
                None => out.push_str(&format!("error[{}]: {}\n", err.kind, err.message)),
            }
        }
        out
    }
}
