//! Line-delimited JSON over standard streams: one `{"program": ..}` request
//! per line, one reply per request, in order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Model, ModelError, ModelKind, Prediction};
use crate::lang::LangError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize, Deserialize)]
struct Request {
    program: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Reply {
    Ok(Prediction),
    Err {
        error: String,
        // lets a remote parse failure surface as the same error in-process
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parse_error: Option<LangError>,
    },
}

/// Answer requests from `input` until end-of-input.
pub fn serve(model: &dyn Model, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Ok(req) => match model.predict(&req.program) {
                Ok(p) => Reply::Ok(p),
                Err(ModelError::ParseFailed(e)) => Reply::Err { error: e.to_string(), parse_error: Some(e) },
                Err(e) => Reply::Err { error: e.to_string(), parse_error: None },
            },
            Err(e) => {
                eprintln!("bad request: {e}");
                Reply::Err { error: "bad request".into(), parse_error: None }
            }
        };
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

struct Connection {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<String>,
    /// Set after a timeout or I/O failure; replies can no longer be paired.
    broken: Option<String>,
}

/// A model living in a subprocess. Requests are serialized over its single
/// connection, so it does not advertise concurrency safety.
pub struct ExternalModel {
    id: String,
    timeout: Duration,
    conn: Mutex<Connection>,
}

impl ExternalModel {
    pub fn spawn(cmd: &str, timeout: Duration) -> Result<ExternalModel, ModelError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ModelError::Unreachable(format!("{cmd}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalModel {
            id: format!("exec:{cmd}"),
            timeout,
            conn: Mutex::new(Connection { child, stdin, replies: rx, broken: None }),
        })
    }
}

impl Connection {
    fn round_trip(&mut self, program: &str, timeout: Duration) -> Result<Prediction, ModelError> {
        if let Some(why) = &self.broken {
            return Err(ModelError::Unreachable(why.clone()));
        }
        let mut line = serde_json::to_string(&Request { program: program.to_string() }).expect("request serializes");
        line.push('\n');
        if let Err(e) = self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()) {
            return Err(self.fail(format!("write failed: {e}"), true));
        }
        let reply = match self.replies.recv_timeout(timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                return Err(self.fail(format!("no reply within {timeout:?}"), false));
            }
            Err(RecvTimeoutError::Disconnected) => return Err(self.fail("model process closed its output".into(), true)),
        };
        match serde_json::from_str::<Reply>(&reply) {
            Ok(Reply::Ok(p)) => Ok(p),
            Ok(Reply::Err { parse_error: Some(e), .. }) => Err(ModelError::ParseFailed(e)),
            Ok(Reply::Err { error, .. }) => Err(ModelError::Remote(error)),
            Err(e) => Err(self.fail(format!("malformed reply {reply:?}: {e}"), false)),
        }
    }

    fn fail(&mut self, why: String, unreachable: bool) -> ModelError {
        self.broken = Some(why.clone());
        if unreachable {
            ModelError::Unreachable(why)
        } else {
            ModelError::Protocol(why)
        }
    }
}

impl Model for ExternalModel {
    fn id(&self) -> &str {
        &self.id
    }
    fn kind(&self) -> ModelKind {
        ModelKind::External
    }
    fn concurrency_safe(&self) -> bool {
        false
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        conn.round_trip(source, self.timeout)
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = conn.child.kill();
        let _ = conn.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Rule, RuleConfig, RulePresence};
    use std::collections::BTreeSet;

    fn model() -> RulePresence {
        let rule = Rule { all_of: BTreeSet::from(["add".into()]), none_of: BTreeSet::new(), label: "addItem".into() };
        RulePresence::new("r", RuleConfig { id: None, rules: vec![rule], default_label: "misc".into() }).unwrap()
    }

    fn run(input: &str) -> Vec<String> {
        let mut out = Vec::new();
        serve(&model(), input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn serves_in_process_answers() {
        let got = run("{\"program\":\"void f(){ add(); }\"}\n{\"program\":\"void f(){}\"}\n");
        assert_eq!(got, [r#"{"label":"addItem","probs":{"addItem":1.0}}"#, r#"{"label":"misc","probs":{"misc":1.0}}"#]);
    }

    #[test]
    fn malformed_line_gets_error_reply_and_serving_continues() {
        let got = run("{\n{\"program\":\"void f(){}\"}\n");
        assert_eq!(got[0], r#"{"error":"bad request"}"#);
        assert!(got[1].starts_with(r#"{"label":"misc""#));
    }

    #[test]
    fn remote_parse_failure_round_trips() {
        let got = run("{\"program\":\"void f(){ x = ; }\"}\n");
        let reply: Reply = serde_json::from_str(&got[0]).unwrap();
        assert!(matches!(reply, Reply::Err { parse_error: Some(LangError::Parse { .. }), .. }));
    }

    #[test]
    fn missing_command_is_unreachable() {
        let m = ExternalModel::spawn("exec /nonexistent/wheacha-model", Duration::from_secs(5)).unwrap();
        assert!(matches!(m.predict("void f(){}"), Err(ModelError::Unreachable(_))));
    }

    #[test]
    fn silent_process_times_out() {
        let m = ExternalModel::spawn("sleep 5", Duration::from_millis(100)).unwrap();
        assert!(matches!(m.predict("void f(){}"), Err(ModelError::Protocol(_))));
    }

    #[test]
    fn canned_replier_is_consumed_in_order() {
        // a canned replier: answers every request with the same line
        let m = ExternalModel::spawn(
            r#"while read l; do echo '{"label":"x","probs":{"x":1.0}}'; done"#,
            Duration::from_secs(5),
        )
        .unwrap();
        for _ in 0..50 {
            assert_eq!(m.predict("void f(){}").unwrap().label, "x");
        }
    }
}
