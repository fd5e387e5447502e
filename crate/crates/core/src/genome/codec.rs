//! Line-oriented genome records:
//!
//! ```text
//! genome <inputs> <outputs>
//! node <id> <input|bias|hidden|output>
//! conn <innovation> <from> <to> <hex-weight> <on|off>
//! end
//! ```

use super::{ConnectionGene, Genome, NodeGene, NodeKind};
use crate::error::{Error, Result};
use crate::hexfloat;
use std::fmt::Write;

impl Genome {
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        writeln!(out, "genome {} {}", self.input_count(), self.output_count()).unwrap();
        for n in self.nodes() {
            writeln!(out, "node {} {}", n.id, n.kind.label()).unwrap();
        }
        for c in self.connections() {
            let state = if c.enabled { "on" } else { "off" };
            writeln!(out, "conn {} {} {} {} {}", c.innovation, c.from, c.to, hexfloat::format(c.weight), state).unwrap();
        }
        out.push_str("end\n");
        out
    }

    /// Parses one record from `(line_number, text)` pairs, consuming lines
    /// up to and including `end`. Blank lines are skipped.
    pub fn parse_record<'a, I>(lines: &mut I) -> Result<Genome>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        let mut lines = lines.filter(|(_, l)| !l.trim().is_empty());
        let (header_line, header) = lines.next().ok_or_else(|| Error::parse(0, "expected `genome` header, found end of input"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (inputs, outputs) = match fields.as_slice() {
            ["genome", i, o] => (
                i.parse().map_err(|_| Error::parse(header_line, format!("bad input count `{i}`")))?,
                o.parse().map_err(|_| Error::parse(header_line, format!("bad output count `{o}`")))?,
            ),
            _ => return Err(Error::parse(header_line, format!("expected `genome <inputs> <outputs>`, found `{header}`"))),
        };
        let mut nodes = Vec::new();
        let mut connections = Vec::new();
        let mut last_line = header_line;
        for (line_no, line) in lines {
            last_line = line_no;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["end"] => {
                    return Genome::from_parts(inputs, outputs, nodes, connections)
                        .map_err(|e| Error::parse(line_no, format!("invalid genome record: {e}")));
                }
                ["node", id, kind] => nodes.push(NodeGene {
                    id: id.parse().map_err(|_| Error::parse(line_no, format!("node record: bad id `{id}`")))?,
                    kind: NodeKind::from_label(kind)
                        .ok_or_else(|| Error::parse(line_no, format!("node record {id}: bad kind `{kind}`")))?,
                }),
                ["conn", innovation, from, to, weight, state] => {
                    let num = |s: &str, what: &str| {
                        s.parse::<u32>()
                            .map_err(|_| Error::parse(line_no, format!("conn record {innovation}: bad {what} `{s}`")))
                    };
                    let weight = hexfloat::parse(weight)
                        .filter(|w| w.is_finite())
                        .ok_or_else(|| Error::parse(line_no, format!("conn record {innovation}: bad weight `{weight}`")))?;
                    let enabled = match *state {
                        "on" => true,
                        "off" => false,
                        other => {
                            return Err(Error::parse(line_no, format!("conn record {innovation}: bad state `{other}`")))
                        }
                    };
                    connections.push(ConnectionGene {
                        innovation: num(innovation, "innovation")?,
                        from: num(from, "source")?,
                        to: num(to, "target")?,
                        weight,
                        enabled,
                    });
                }
                _ => return Err(Error::parse(line_no, format!("unexpected line in genome record: `{line}`"))),
            }
        }
        Err(Error::parse(last_line, "genome record is missing `end`"))
    }

    pub fn from_record(text: &str) -> Result<Genome> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        Genome::parse_record(&mut lines)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{mutate_structure, mutate_weights, InnovationRegistry, MutationConfig};
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn evolved(seed: u64) -> Genome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reg = InnovationRegistry::new(4, 3);
        let mut g = Genome::minimal(4, 3, &mut rng).unwrap();
        for _ in 0..8 {
            g = mutate_structure(&g, &mut reg, &mut rng);
            g = mutate_weights(&g, &MutationConfig::default(), &mut rng);
        }
        g
    }

    proptest! {
        #[test]
        fn record_round_trip_is_bit_exact(seed in any::<u64>()) {
            let g = evolved(seed);
            let back = Genome::from_record(&g.to_record()).unwrap();
            prop_assert_eq!(&back, &g);
            for (a, b) in back.connections().iter().zip(g.connections()) {
                prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            }
        }
    }

    #[test]
    fn corrupted_weight_names_the_record() {
        let text = evolved(1).to_record().replacen("0x", "0q", 1);
        let err = Genome::from_record(&text).unwrap_err().to_string();
        assert!(err.contains("conn record"), "{err}");
        assert!(err.contains("bad weight"), "{err}");
    }

    #[test]
    fn missing_end_is_reported() {
        let text = evolved(2).to_record().replace("end\n", "");
        assert!(Genome::from_record(&text).unwrap_err().to_string().contains("missing `end`"));
    }

    #[test]
    fn cyclic_record_is_rejected() {
        let text = "genome 1 1\nnode 0 input\nnode 1 bias\nnode 2 output\nnode 3 hidden\nnode 4 hidden\n\
                    conn 5 3 4 0x1p+0 on\nconn 6 4 3 0x1p+0 on\nend\n";
        assert!(Genome::from_record(text).is_err());
    }
}
