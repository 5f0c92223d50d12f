//! CSV and JSON renderings of a run.

use std::io::Write;

use crate::dns::{DnsResponsePacket, Verdict};

use super::{RunMetrics, SweepRow};

/// One row per packet: `packet_index,timestamp,qname,action,rule`.
/// Packets without a DNS header get an empty qname; unflagged packets an
/// empty rule.
pub fn write_verdicts_csv<W: Write>(verdicts: &[Verdict], packets: &[DnsResponsePacket], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["packet_index", "timestamp", "qname", "action", "rule"])?;
    for v in verdicts {
        let p = &packets[v.packet_index];
        w.write_record([
            v.packet_index.to_string(),
            p.timestamp.to_string(),
            p.qname().map(|q| q.to_string()).unwrap_or_default(),
            v.action.as_str().to_owned(),
            v.fired_rule.map(|r| r.as_str().to_owned()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_json<W: Write>(metrics: &RunMetrics, mut out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(&mut out, metrics)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Single-row CSV of the headline counts and rates.
pub fn write_metrics_csv<W: Write>(m: &RunMetrics, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "total",
        "forwarded",
        "truncated",
        "dropped",
        "malformed",
        "r1",
        "r2",
        "r3",
        "attack_packets",
        "attack_forwarded",
        "intended_attack",
        "benign_packets",
        "benign_flagged",
        "asr",
        "fp_rate",
        "first_flag_index",
    ])?;
    let counts = [
        m.total,
        m.forwarded,
        m.truncated,
        m.dropped,
        m.malformed,
        m.per_rule.r1,
        m.per_rule.r2,
        m.per_rule.r3,
        m.attack_packets,
        m.attack_forwarded,
        m.intended_attack,
        m.benign_packets,
        m.benign_flagged,
    ];
    let mut row: Vec<String> = counts.iter().map(usize::to_string).collect();
    row.push(m.asr.to_string());
    row.push(m.fp_rate.to_string());
    row.push(m.first_flag_index.map(|i| i.to_string()).unwrap_or_default());
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// One row per grid point, with a header.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dns::{Action, DnsMessage, Question, RecordType, RuleId, Timestamp};

    #[test]
    fn verdict_rows() {
        let m = DnsMessage::response(1, Question::new("a.com".parse().unwrap(), RecordType::A));
        let p = DnsResponsePacket::udp(
            Timestamp(1_500_000),
            ("192.0.2.1".parse().unwrap(), 53),
            ("10.0.0.1".parse().unwrap(), 999),
            m,
        );
        let verdicts =
            [Verdict::forward(0), Verdict { action: Action::Truncate, fired_rule: Some(RuleId::R1), packet_index: 1 }];
        let mut buf = Vec::new();
        write_verdicts_csv(&verdicts, &[p.clone(), p], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "packet_index,timestamp,qname,action,rule\n0,1.500000,a.com,forward,\n1,1.500000,a.com,truncate,R1\n"
        );
    }

    #[test]
    fn sweep_csv_header() {
        let row = SweepRow {
            depth: 2,
            width: 100,
            repeats: 1,
            asr: 0.0,
            fp_rate: 0.5,
            fp_min: 0.5,
            fp_max: 0.5,
            attack_forwarded: 0.0,
            truncated: 1.0,
            dropped: 0.0,
            first_flag_index: None,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&[row], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "depth,width,repeats,asr,fp_rate,fp_min,fp_max,attack_forwarded,truncated,dropped,first_flag_index\n\
             2,100,1,0.0,0.5,0.5,0.5,0.0,1.0,0.0,\n"
        );
    }

    #[test]
    fn metrics_csv_has_one_row() {
        let mut buf = Vec::new();
        write_metrics_csv(&RunMetrics { total: 2, forwarded: 2, ..Default::default() }, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("2,2,0,0,0,"));
    }

    #[test]
    fn metrics_json_round_trips() {
        let m = RunMetrics { total: 3, forwarded: 3, ..Default::default() };
        let mut buf = Vec::new();
        write_metrics_json(&m, &mut buf).unwrap();
        let back: RunMetrics = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, m);
    }
}
