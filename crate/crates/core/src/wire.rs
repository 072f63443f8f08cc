//! Line-oriented persistence: message logs and scenario snapshots.
//!
//! Message records carry the sender, recipient, BP iteration, the shared
//! id prefix, and `suffix:theta` pairs with theta printed to 12+ significant
//! digits. Snapshot records carry node id, role, true coordinates, and the
//! belief in the same prefix-stripped form.

use std::io::Write;
use std::str::FromStr;

use crate::belief::Belief;
use crate::bp::Message;
use crate::error::{Error, Result};
use crate::grid::{common_prefix_strip, GridId};
use crate::sim::{NodeState, Role};

fn belief_fields(belief: &Belief) -> Result<(String, String)> {
    let ids: Vec<GridId> = belief.support().copied().collect();
    let (prefix, suffixes) = common_prefix_strip(&ids)?;
    let entries = belief
        .iter()
        .zip(suffixes)
        .map(|((_, theta), suffix)| format!("{suffix}:{theta:.12e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((prefix, entries))
}

fn parse_belief_fields(prefix: &str, entries: &str) -> Result<Belief> {
    let mut weights = Vec::new();
    for item in entries.split(' ').filter(|s| !s.is_empty()) {
        let (suffix, theta) = item
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("malformed belief entry {item:?}")))?;
        let id = GridId::from_str(&format!("{prefix}{suffix}"))?;
        let theta: f64 = theta
            .parse()
            .map_err(|_| Error::Parse(format!("bad probability {theta:?}")))?;
        weights.push((id, theta));
    }
    Belief::from_weights(weights)
}

/// Write one message record.
pub fn write_message(w: &mut impl Write, msg: &Message) -> Result<()> {
    let (prefix, entries) = belief_fields(&msg.belief)?;
    writeln!(
        w,
        "{}\t{}\t{}\t{}\t{}",
        msg.from, msg.to, msg.iteration, prefix, entries
    )?;
    Ok(())
}

/// Parse one message record.
pub fn read_message(line: &str) -> Result<Message> {
    let fields: Vec<&str> = line.trim_end_matches('\n').split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::Parse(format!(
            "expected 5 tab-separated fields, got {}",
            fields.len()
        )));
    }
    let int = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))
    };
    Ok(Message {
        from: int(fields[0])?,
        to: int(fields[1])?,
        iteration: int(fields[2])?,
        belief: parse_belief_fields(fields[3], fields[4])?,
    })
}

/// Write one snapshot record per node: id, role, x, y, belief.
pub fn write_snapshot(w: &mut impl Write, nodes: &[NodeState]) -> Result<()> {
    for node in nodes {
        let role = match node.role {
            Role::Agent => "agent",
            Role::Anchor => "anchor",
        };
        let (prefix, entries) = belief_fields(&node.belief)?;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            node.id, role, node.true_position[0], node.true_position[1], prefix, entries
        )?;
    }
    Ok(())
}

/// Parsed snapshot record; neighbor sets are not part of the format.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub id: usize,
    pub role: Role,
    pub position: [f64; 2],
    pub belief: Belief,
}

pub fn read_snapshot_line(line: &str) -> Result<SnapshotRecord> {
    let fields: Vec<&str> = line.trim_end_matches('\n').split('\t').collect();
    if fields.len() != 6 {
        return Err(Error::Parse(format!(
            "expected 6 tab-separated fields, got {}",
            fields.len()
        )));
    }
    let role = match fields[1] {
        "agent" => Role::Agent,
        "anchor" => Role::Anchor,
        other => return Err(Error::Parse(format!("unknown role {other:?}"))),
    };
    let num = |s: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
    };
    Ok(SnapshotRecord {
        id: fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad id {:?}", fields[0])))?,
        role,
        position: [num(fields[2])?, num(fields[3])?],
        belief: parse_belief_fields(fields[4], fields[5])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_mgrs;

    #[test]
    fn message_round_trip_mgrs() {
        let a = GridId::Mgrs(parse_mgrs("10QCG12345678").unwrap());
        let b = GridId::Mgrs(parse_mgrs("10QCG12355678").unwrap());
        let belief = Belief::from_weights([(a, 0.75), (b, 0.25)]).unwrap();
        let msg = Message {
            from: 3,
            to: 5,
            iteration: 2,
            belief,
        };
        let mut buf = Vec::new();
        write_message(&mut buf, &msg).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("10QCG\t"), "prefix should be shared: {line}");
        let back = read_message(&line).unwrap();
        assert_eq!(back.from, 3);
        assert_eq!(back.to, 5);
        assert_eq!(back.iteration, 2);
        assert!((back.belief.get(&a).unwrap() - 0.75).abs() < 1e-11);
    }

    #[test]
    fn message_round_trip_planar() {
        let belief =
            Belief::from_weights([(GridId::planar(4, 2), 0.5), (GridId::planar(-1, 9), 0.5)])
                .unwrap();
        let msg = Message {
            from: 0,
            to: 1,
            iteration: 7,
            belief: belief.clone(),
        };
        let mut buf = Vec::new();
        write_message(&mut buf, &msg).unwrap();
        let back = read_message(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.belief, belief);
    }

    #[test]
    fn theta_precision_survives() {
        let a = GridId::planar(0, 0);
        let b = GridId::planar(1, 0);
        let theta = 0.123456789012345;
        let belief = Belief::from_weights([(a, theta), (b, 1.0 - theta)]).unwrap();
        let mut buf = Vec::new();
        write_message(
            &mut buf,
            &Message {
                from: 0,
                to: 0,
                iteration: 0,
                belief,
            },
        )
        .unwrap();
        let back = read_message(std::str::from_utf8(&buf).unwrap()).unwrap();
        let got = back.belief.get(&a).unwrap();
        assert!((got - theta).abs() / theta < 1e-12);
    }
}
