use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use super::{discover_sessions, outputs, Session};
use crate::io::formats;
use crate::io::table::TextWriter;
use crate::labeling::ContactState;
use crate::{Error, Hand, Result};

/// Frame counts for one hand of one session. The four state counts
/// partition `total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandStats {
    pub session: String,
    pub hand: Hand,
    pub total: usize,
    pub contact: usize,
    pub no_contact: usize,
    pub ambiguous: usize,
    pub excluded: usize,
    /// Frames with an accepted contacted-object mask.
    pub pseudolabels: usize,
}

impl HandStats {
    /// Contact share of the labeled (Contact or NoContact) frames.
    pub fn contact_fraction(&self) -> Option<f64> {
        let labeled = self.contact + self.no_contact;
        (labeled > 0).then(|| self.contact as f64 / labeled as f64)
    }

    pub fn is_partition(&self) -> bool {
        self.contact + self.no_contact + self.ambiguous + self.excluded == self.total
    }

    fn add(&mut self, o: &HandStats) {
        self.total += o.total;
        self.contact += o.contact;
        self.no_contact += o.no_contact;
        self.ambiguous += o.ambiguous;
        self.excluded += o.excluded;
        self.pseudolabels += o.pseudolabels;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub rows: Vec<HandStats>,
    pub fingerprint: String,
}

impl CorpusStats {
    /// Sums over all rows; `session` reads `*`.
    pub fn totals(&self) -> HandStats {
        let mut t = HandStats {
            session: "*".into(),
            hand: Hand::Left,
            total: 0,
            contact: 0,
            no_contact: 0,
            ambiguous: 0,
            excluded: 0,
            pseudolabels: 0,
        };
        self.rows.iter().for_each(|r| t.add(r));
        t
    }

    pub fn contact_fraction(&self) -> Option<f64> {
        self.totals().contact_fraction()
    }

    /// Machine-readable table.
    pub fn to_text(&self) -> String {
        let mut w = TextWriter::new("corpus-stats", &[("fingerprint", self.fingerprint.clone())]);
        w.comment("columns: session, hand, total, contact, no_contact, ambiguous, excluded, pseudolabels, contact_fraction|NA");
        for r in &self.rows {
            w.row([
                r.session.clone(),
                r.hand.to_string(),
                r.total.to_string(),
                r.contact.to_string(),
                r.no_contact.to_string(),
                r.ambiguous.to_string(),
                r.excluded.to_string(),
                r.pseudolabels.to_string(),
                r.contact_fraction().map_or_else(|| "NA".into(), |f| f.to_string()),
            ]);
        }
        w.finish()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:<5} {:>9} {:>9} {:>10} {:>9} {:>9} {:>12} {:>8}",
            "session", "hand", "frames", "contact", "no_contact", "ambig", "excluded", "pseudolabels", "contact%"
        )?;
        let pct = |r: &HandStats| r.contact_fraction().map_or_else(|| "-".into(), |x| format!("{:.2}", 100.0 * x));
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:<5} {:>9} {:>9} {:>10} {:>9} {:>9} {:>12} {:>8}",
                r.session,
                r.hand.as_str(),
                r.total,
                r.contact,
                r.no_contact,
                r.ambiguous,
                r.excluded,
                r.pseudolabels,
                pct(r)
            )?;
        }
        let t = self.totals();
        write!(
            f,
            "{:<24} {:<5} {:>9} {:>9} {:>10} {:>9} {:>9} {:>12} {:>8}",
            "total",
            "",
            t.total,
            t.contact,
            t.no_contact,
            t.ambiguous,
            t.excluded,
            t.pseudolabels,
            pct(&t)
        )
    }
}

fn session_stats(session: &Session, fingerprints: &mut BTreeMap<String, PathBuf>) -> Result<Vec<HandStats>> {
    let mut accepted: BTreeMap<Hand, BTreeSet<usize>> = BTreeMap::new();
    let ledger = session.output(outputs::LEDGER);
    if ledger.is_file() {
        let (rows, fp) = formats::read_pseudolabel_ledger(&ledger)?;
        fingerprints.entry(fp).or_insert(ledger);
        for r in rows.into_iter().filter(|r| r.mask_id.is_some()) {
            accepted.entry(r.hand).or_default().insert(r.frame);
        }
    }
    let mut hands: BTreeSet<Hand> = session.sensors()?.into_iter().map(|(h, _)| h).collect();
    hands.extend(accepted.keys());
    let mut out = Vec::new();
    for hand in hands {
        let mut row = HandStats {
            session: session.manifest.session.clone(),
            hand,
            total: 0,
            contact: 0,
            no_contact: 0,
            ambiguous: 0,
            excluded: 0,
            pseudolabels: accepted.get(&hand).map_or(0, BTreeSet::len),
        };
        if session.manifest.sensors.contains_key(hand.as_str()) {
            let path = session.output(&outputs::frames(hand));
            let fs = formats::read_frame_states(&path)?;
            fingerprints.entry(fs.fingerprint.clone()).or_insert(path);
            row.total = fs.states.len();
            for s in fs.states {
                match s {
                    ContactState::Contact => row.contact += 1,
                    ContactState::NoContact => row.no_contact += 1,
                    ContactState::Ambiguous => row.ambiguous += 1,
                    ContactState::Excluded => row.excluded += 1,
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Frame statistics over one session or every session below `path`.
/// Sessions processed under different configurations are rejected.
pub fn stats(path: &Path) -> Result<CorpusStats> {
    let sessions = discover_sessions(path)?;
    let mut fingerprints: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut rows = Vec::new();
    for s in &sessions {
        rows.extend(session_stats(s, &mut fingerprints)?);
    }
    if fingerprints.len() > 1 {
        let listing: Vec<String> = fingerprints.iter().map(|(fp, p)| format!("{fp} ({})", p.display())).collect();
        return Err(Error::Schema(format!("mixed config fingerprints in corpus: {}", listing.join(", "))));
    }
    let fingerprint = fingerprints.into_keys().next().unwrap_or_else(|| "none".into());
    Ok(CorpusStats { rows, fingerprint })
}
