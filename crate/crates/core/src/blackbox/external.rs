//! Line-delimited JSON client for a model running as a child process.
//!
//! Request (one line): `{"id": "...", "values": [[...], ...]}` with `D` rows
//! of `T` values. Response (one line): `{"id": "...", "scores": {"<class>": x}}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Classifier, ModelError, PredictionVector};
use crate::dataset::{Label, MtsInstance};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictRequest<V> {
    pub id: String,
    pub values: V,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictResponse<F> {
    pub id: String,
    pub scores: BTreeMap<Label, F>,
}

/// Encodes one request line (without the trailing newline).
pub fn encode_request<F: Scalar>(id: &str, instance: &MtsInstance<F>) -> String {
    serde_json::to_string(&PredictRequest {
        id: id.to_owned(),
        values: instance.values(),
    })
    .expect("finite values always serialize")
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    counter: u64,
    dead: Option<String>,
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Model served by an external executable. Requests to one process are
/// serialized behind a mutex.
pub struct ExternalModel {
    session: Mutex<Session>,
    timeout: Duration,
    classes: Vec<Label>,
    shape: (usize, usize),
}

impl ExternalModel {
    pub fn spawn(
        program: &Path,
        args: &[String],
        timeout: Duration,
        classes: Vec<Label>,
        shape: (usize, usize),
    ) -> Result<Self, ModelError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ModelError::Spawn {
                program: program.display().to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(ExternalModel {
            session: Mutex::new(Session {
                child,
                stdin,
                lines: rx,
                counter: 0,
                dead: None,
            }),
            timeout,
            classes,
            shape,
        })
    }

    fn exchange(&self, instance: &MtsInstance<impl Scalar>) -> Result<String, ModelError> {
        let mut s = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(reason) = &s.dead {
            return Err(ModelError::Crashed(reason.clone()));
        }
        s.counter += 1;
        let id = format!("{}-{}", instance.id, s.counter);
        let mut line = encode_request(&id, instance);
        line.push('\n');
        let write = s.stdin.write_all(line.as_bytes()).and_then(|_| s.stdin.flush());
        if let Err(e) = write {
            let reason = format!("write failed: {e}");
            s.dead = Some(reason.clone());
            return Err(ModelError::Crashed(reason));
        }
        let reply = match s.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => {
                let reason = format!("read failed: {e}");
                s.dead = Some(reason.clone());
                return Err(ModelError::Crashed(reason));
            }
            Err(RecvTimeoutError::Timeout) => {
                s.dead = Some("timed out earlier".into());
                let _ = s.child.kill();
                return Err(ModelError::Timeout(self.timeout.as_secs_f64()));
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = s.child.try_wait().ok().flatten();
                let reason = match status {
                    Some(st) => format!("process exited with {st}"),
                    None => "output closed".to_owned(),
                };
                s.dead = Some(reason.clone());
                return Err(ModelError::Crashed(reason));
            }
        };
        Ok(format!("{id}\n{reply}"))
    }
}

impl<F: Scalar> Classifier<F> for ExternalModel {
    fn classes(&self) -> &[Label] {
        &self.classes
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn predict(&self, instance: &MtsInstance<F>) -> Result<PredictionVector<F>, ModelError> {
        self.check_shape(instance)?;
        let raw = self.exchange(instance)?;
        let (id, reply) = raw.split_once('\n').expect("id prefix");
        let resp: PredictResponse<f64> = serde_json::from_str(reply)
            .map_err(|e| ModelError::Malformed(format!("{e}: {reply}")))?;
        if resp.id != id {
            return Err(ModelError::Malformed(format!(
                "response id {:?} does not match request id {id:?}",
                resp.id
            )));
        }
        let keys: Vec<&Label> = resp.scores.keys().collect();
        if keys.len() != self.classes.len() || keys.iter().zip(&self.classes).any(|(a, b)| *a != b)
        {
            return Err(ModelError::Malformed(format!(
                "response classes {keys:?} differ from {:?}",
                self.classes
            )));
        }
        let mut scores = BTreeMap::new();
        for (label, v) in resp.scores {
            let v = F::from_f64(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| ModelError::Malformed(format!("non-finite score for {label}")))?;
            scores.insert(label, v);
        }
        Ok(PredictionVector::new(scores))
    }
}
