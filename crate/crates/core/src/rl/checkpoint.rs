//! Plain-text parameter dump.
//!
//! ```text
//! isac-ddpg-checkpoint v1
//! net actor <input> <hidden> <output> <activation>
//! <p0> <p1> ...
//! net critic ...
//! ```
//!
//! Four `net` blocks appear in the order actor, critic, target_actor,
//! target_critic. Values use the shortest representation that round-trips.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::{Mlp, OutputActivation};
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "isac-ddpg-checkpoint v1";

const NAMES: [&str; 4] = ["actor", "critic", "target_actor", "target_critic"];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
}

impl Checkpoint {
    fn nets(&self) -> [&Mlp; 4] {
        [&self.actor, &self.critic, &self.target_actor, &self.target_critic]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(CHECKPOINT_HEADER);
        out.push('\n');
        for (name, net) in NAMES.iter().zip(self.nets()) {
            let _ = writeln!(
                out,
                "net {name} {} {} {} {}",
                net.input,
                net.hidden,
                net.output,
                net.activation.as_str()
            );
            let values: Vec<String> = net.params.iter().map(|p| p.to_string()).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint(msg);
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CHECKPOINT_HEADER => {}
            other => return Err(bad(format!("expected header `{CHECKPOINT_HEADER}`, found {other:?}"))),
        }
        let mut nets = Vec::with_capacity(4);
        for name in NAMES {
            let head = lines.next().ok_or_else(|| bad(format!("missing block `{name}`")))?;
            let fields: Vec<&str> = head.split_whitespace().collect();
            if fields.len() != 6 || fields[0] != "net" || fields[1] != name {
                return Err(bad(format!("malformed block header `{head}` (expected net {name} ...)")));
            }
            let dim = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad dimension `{s}` in block {name}")));
            let (input, hidden, output) = (dim(fields[2])?, dim(fields[3])?, dim(fields[4])?);
            let activation = OutputActivation::parse(fields[5])
                .ok_or_else(|| bad(format!("unknown activation `{}`", fields[5])))?;
            let body = lines.next().ok_or_else(|| bad(format!("missing parameters for {name}")))?;
            let params = body
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad value `{v}` in {name}"))))
                .collect::<Result<Vec<f64>>>()?;
            let expected = Mlp::param_count(input, hidden, output);
            if params.len() != expected {
                return Err(bad(format!("{name}: expected {expected} parameters, found {}", params.len())));
            }
            if params.iter().any(|p| !p.is_finite()) {
                return Err(bad(format!("{name}: non-finite parameter")));
            }
            nets.push(Mlp {
                input,
                hidden,
                output,
                activation,
                params,
            });
        }
        let mut it = nets.into_iter();
        let ckpt = Checkpoint {
            actor: it.next().expect("four blocks"),
            critic: it.next().expect("four blocks"),
            target_actor: it.next().expect("four blocks"),
            target_critic: it.next().expect("four blocks"),
        };
        if !ckpt.actor.same_shape(&ckpt.target_actor) || !ckpt.critic.same_shape(&ckpt.target_critic) {
            return Err(bad("target shapes differ from online shapes".into()));
        }
        if ckpt.critic.input != ckpt.actor.input + ckpt.actor.output || ckpt.critic.output != 1 {
            return Err(bad("critic input must be state + action with a scalar output".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
