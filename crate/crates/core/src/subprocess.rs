//! Line-delimited JSON bridges to external models and codecs.
//!
//! Classifier: one request `{"x":[...]}` per line on the child's stdin, one
//! reply `{"p":0.73}` per line on its stdout.
//!
//! Codec: requests `{"op":"encode","v":[...]}` or `{"op":"decode","v":[...]}`,
//! replies `{"v":[...]}`.
//!
//! Both adapters are serial: a single pipe pair is shared behind a mutex.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::classifier::{label_from_probability, Classifier, Concurrency};
use crate::codec::Codec;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Pipe {
    fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Subprocess(format!("cannot start '{program}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Pipe { child, stdin, stdout })
    }

    fn round_trip(&mut self, request: &str) -> Result<String> {
        self.stdin
            .write_all(request.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Subprocess(format!("write failed: {e}")))?;
        let mut line = String::new();
        let n = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::Subprocess(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::Subprocess("child closed its stdout".into()));
        }
        Ok(line)
    }
}

impl Drop for Pipe {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a, F: Scalar> {
    x: &'a [F],
}

#[derive(Deserialize)]
#[serde(bound = "")]
struct ScoreReply<F: Scalar> {
    p: F,
}

#[derive(Serialize)]
struct CodecRequest<'a, F: Scalar> {
    op: &'a str,
    v: &'a [F],
}

#[derive(Deserialize)]
#[serde(bound = "")]
struct CodecReply<F: Scalar> {
    v: Vec<F>,
}

/// A classifier scored by an external process.
pub struct SubprocessClassifier {
    pipe: Mutex<Pipe>,
    command: String,
}

impl SubprocessClassifier {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        Ok(SubprocessClassifier {
            pipe: Mutex::new(Pipe::spawn(program, args)?),
            command: std::iter::once(program.to_string()).chain(args.iter().cloned()).collect::<Vec<_>>().join(" "),
        })
    }

    fn score<F: Scalar>(&self, x: &[F]) -> Result<F> {
        let request = serde_json::to_string(&ScoreRequest { x })?;
        let line = self.pipe.lock().expect("pipe lock").round_trip(&request)?;
        let reply: ScoreReply<F> = serde_json::from_str(line.trim())?;
        if !(reply.p >= F::zero() && reply.p <= F::one()) {
            return Err(Error::Subprocess(format!("probability {} outside [0, 1]", reply.p)));
        }
        Ok(reply.p)
    }
}

impl<F: Scalar> Classifier<F> for SubprocessClassifier {
    fn label(&self, x: &[F]) -> Result<Label> {
        Ok(label_from_probability(self.score(x)?))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        self.score(x).map(Some)
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Serial
    }

    fn describe(&self) -> String {
        format!("subprocess `{}`", self.command)
    }
}

/// An encoder/decoder served by an external process.
pub struct SubprocessCodec {
    pipe: Mutex<Pipe>,
    command: String,
    input_dim: usize,
    latent_dim: usize,
}

impl SubprocessCodec {
    pub fn spawn(program: &str, args: &[String], input_dim: usize, latent_dim: usize) -> Result<Self> {
        Ok(SubprocessCodec {
            pipe: Mutex::new(Pipe::spawn(program, args)?),
            command: program.to_string(),
            input_dim,
            latent_dim,
        })
    }

    fn call<F: Scalar>(&self, op: &str, v: &[F], expect: usize) -> Result<Vec<F>> {
        let request = serde_json::to_string(&CodecRequest { op, v })?;
        let line = self.pipe.lock().expect("pipe lock").round_trip(&request)?;
        let reply: CodecReply<F> = serde_json::from_str(line.trim())?;
        if reply.v.len() != expect {
            return Err(Error::Dimension {
                expected: expect,
                found: reply.v.len(),
            });
        }
        Ok(reply.v)
    }
}

impl<F: Scalar> Codec<F> for SubprocessCodec {
    fn name(&self) -> String {
        format!("subprocess `{}`", self.command)
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn encode(&self, x: &[F]) -> Result<Vec<F>> {
        self.call("encode", x, self.latent_dim)
    }

    fn decode(&self, z: &[F]) -> Result<Vec<F>> {
        self.call("decode", z, self.input_dim)
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Serial
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn python() -> Option<String> {
        ["python3", "python"]
            .into_iter()
            .find(|p| Command::new(p).arg("--version").output().is_ok())
            .map(String::from)
    }

    #[test]
    fn scores_through_child_process() {
        let Some(py) = python() else { return };
        let script = r#"
import sys, json
for line in sys.stdin:
    x = json.loads(line)["x"]
    p = 1.0 if x[0] > 0 else 0.25
    print(json.dumps({"p": p}), flush=True)
"#;
        let f = SubprocessClassifier::spawn(&py, &["-c".into(), script.into()]).unwrap();
        assert_eq!(Classifier::<f64>::label(&f, &[1.0, 0.0]).unwrap(), Label::Positive);
        assert_eq!(Classifier::<f64>::probability(&f, &[-1.0, 0.0]).unwrap(), Some(0.25));
        assert_eq!(Classifier::<f64>::concurrency(&f), Concurrency::Serial);
    }

    #[test]
    fn codec_protocol_round_trip() {
        let Some(py) = python() else { return };
        let script = r#"
import sys, json
for line in sys.stdin:
    req = json.loads(line)
    v = req["v"]
    out = [2 * t for t in v] if req["op"] == "encode" else [t / 2 for t in v]
    print(json.dumps({"v": out}), flush=True)
"#;
        let c = SubprocessCodec::spawn(&py, &["-c".into(), script.into()], 2, 2).unwrap();
        let z = Codec::<f64>::encode(&c, &[1.0, -3.0]).unwrap();
        assert_eq!(z, vec![2.0, -6.0]);
        assert_eq!(Codec::<f64>::decode(&c, &z).unwrap(), vec![1.0, -3.0]);
    }

    #[test]
    fn missing_program_is_reported() {
        assert!(matches!(
            SubprocessClassifier::spawn("/definitely/not/here", &[]),
            Err(Error::Subprocess(_))
        ));
    }
}
