//! Embedding corpus: typed records plus a strict CSV format.
//!
//! A corpus holds precomputed face and voice embeddings tagged with an
//! identity and a language. The text format is a single CSV file whose
//! header is fixed and whose rows carry four metadata fields followed by
//! the embedding coordinates. Per-modality dimensionality is inferred from
//! the first row of each modality and enforced on every later row, so a
//! corpus can mix face and voice vectors of different widths but never two
//! widths within one modality.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::util::fmt_f64;

/// Fixed header line of the corpus CSV format.
pub const CSV_HEADER: &str = "sample_id,identity,modality,language,dim";

/// Which branch of the model a record feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Face,
    Voice,
}

impl Modality {
    fn parse(s: &str) -> Option<Modality> {
        match s {
            "face" => Some(Modality::Face),
            "voice" => Some(Modality::Voice),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Face => "face",
            Modality::Voice => "voice",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One embedding vector with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub sample_id: String,
    pub identity: String,
    pub modality: Modality,
    pub language: String,
    pub vector: Vec<f64>,
}

/// An ordered collection of records with per-modality dims and the set of
/// languages present.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<EmbeddingRecord>,
    face_dim: Option<usize>,
    voice_dim: Option<usize>,
    languages: BTreeSet<String>,
}

/// True for non-empty strings of ASCII letters, digits, `_`, or `-`.
/// Identifiers in the CSV format are restricted to this alphabet so that
/// the comma-separated layout can never be ambiguous.
pub fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl Corpus {
    /// Builds a corpus from records assembled in memory, enforcing the same
    /// invariants the parser does: valid labels, unique sample ids, finite
    /// non-empty vectors, and one dim per modality.
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Corpus> {
        let mut face_dim = None;
        let mut voice_dim = None;
        let mut languages = BTreeSet::new();
        let mut seen_ids: HashSet<&str> = HashSet::with_capacity(records.len());

        for rec in &records {
            for (field, value) in [
                ("sample_id", &rec.sample_id),
                ("identity", &rec.identity),
                ("language", &rec.language),
            ] {
                if !valid_label(value) {
                    return Err(Error::Argument(format!(
                        "invalid {field} `{value}`: labels must be non-empty and use only ASCII letters, digits, `_`, and `-`"
                    )));
                }
            }
            if !seen_ids.insert(&rec.sample_id) {
                return Err(Error::Argument(format!(
                    "duplicate sample id `{}`",
                    rec.sample_id
                )));
            }
            if rec.vector.is_empty() {
                return Err(Error::Argument(format!(
                    "sample `{}` has an empty embedding vector",
                    rec.sample_id
                )));
            }
            if rec.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "sample `{}` has a non-finite embedding coordinate",
                    rec.sample_id
                )));
            }
            let dim_slot = match rec.modality {
                Modality::Face => &mut face_dim,
                Modality::Voice => &mut voice_dim,
            };
            match *dim_slot {
                None => *dim_slot = Some(rec.vector.len()),
                Some(d) if d != rec.vector.len() => {
                    return Err(Error::Shape(format!(
                        "sample `{}` has {} coordinates but earlier {} records have {}",
                        rec.sample_id,
                        rec.vector.len(),
                        rec.modality,
                        d
                    )));
                }
                Some(_) => {}
            }
            languages.insert(rec.language.clone());
        }

        Ok(Corpus {
            records,
            face_dim,
            voice_dim,
            languages,
        })
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Width of face vectors, or `None` when no face record exists.
    pub fn face_dim(&self) -> Option<usize> {
        self.face_dim
    }

    /// Width of voice vectors, or `None` when no voice record exists.
    pub fn voice_dim(&self) -> Option<usize> {
        self.voice_dim
    }

    /// Languages present, in sorted order.
    pub fn languages(&self) -> &BTreeSet<String> {
        &self.languages
    }

    /// Distinct identities, in sorted order.
    pub fn identities(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.identity.as_str()).collect()
    }

    /// Borrowing view of the records that pass all the given filters.
    /// `None` means "keep everything" for that axis. Order is preserved.
    pub fn select(
        &self,
        language: Option<&str>,
        modality: Option<Modality>,
        identities: Option<&BTreeSet<String>>,
    ) -> Vec<&EmbeddingRecord> {
        self.records
            .iter()
            .filter(|r| language.is_none_or(|l| r.language == l))
            .filter(|r| modality.is_none_or(|m| r.modality == m))
            .filter(|r| identities.is_none_or(|ids| ids.contains(&r.identity)))
            .collect()
    }

    /// Like [`Corpus::select`] but produces an owned sub-corpus. The
    /// per-modality dims carry over from the source so the schema survives
    /// even when a modality is filtered away entirely; the language set is
    /// recomputed from the surviving records.
    pub fn filter(
        &self,
        language: Option<&str>,
        modality: Option<Modality>,
        identities: Option<&BTreeSet<String>>,
    ) -> Corpus {
        let records: Vec<EmbeddingRecord> = self
            .select(language, modality, identities)
            .into_iter()
            .cloned()
            .collect();
        let languages = records.iter().map(|r| r.language.clone()).collect();
        Corpus {
            records,
            face_dim: self.face_dim,
            voice_dim: self.voice_dim,
            languages,
        }
    }

    /// Sample-id keyed view of the records.
    pub fn sample_index(&self) -> BTreeMap<&str, &EmbeddingRecord> {
        self.records
            .iter()
            .map(|r| (r.sample_id.as_str(), r))
            .collect()
    }
}

/// Parses the corpus CSV format. Row-level problems report the 1-based line
/// number of the offending row.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty input: expected a header line".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Format(format!(
            "bad header `{header}`: expected `{CSV_HEADER}`"
        )));
    }

    let mut records = Vec::new();
    let mut face_dim: Option<usize> = None;
    let mut voice_dim: Option<usize> = None;
    let mut languages = BTreeSet::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let row = |msg: String| Error::Row { line: line_no, msg };

        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(row(format!(
                "expected at least 5 comma-separated fields, found {}",
                fields.len()
            )));
        }
        let (sample_id, identity, modality_str, language) =
            (fields[0], fields[1], fields[2], fields[3]);
        for (name, value) in [
            ("sample_id", sample_id),
            ("identity", identity),
            ("language", language),
        ] {
            if !valid_label(value) {
                return Err(row(format!(
                    "invalid {name} `{value}`: labels must be non-empty and use only ASCII letters, digits, `_`, and `-`"
                )));
            }
        }
        let modality = Modality::parse(modality_str).ok_or_else(|| {
            row(format!(
                "unknown modality `{modality_str}`: expected `face` or `voice`"
            ))
        })?;

        if !seen_ids.insert(sample_id.to_string()) {
            return Err(Error::Duplicate {
                id: sample_id.to_string(),
                line: line_no,
            });
        }

        let coords = &fields[4..];
        let dim_slot = match modality {
            Modality::Face => &mut face_dim,
            Modality::Voice => &mut voice_dim,
        };
        match *dim_slot {
            None => *dim_slot = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(row(format!(
                    "{modality} row has {} coordinates, expected {d}",
                    coords.len()
                )));
            }
            Some(_) => {}
        }

        let mut vector = Vec::with_capacity(coords.len());
        for (ci, raw) in coords.iter().enumerate() {
            let value: f64 = raw.parse().map_err(|_| {
                row(format!("coordinate {}: invalid number `{raw}`", ci + 1))
            })?;
            if !value.is_finite() {
                return Err(row(format!("coordinate {} is not finite", ci + 1)));
            }
            vector.push(value);
        }

        languages.insert(language.to_string());
        records.push(EmbeddingRecord {
            sample_id: sample_id.to_string(),
            identity: identity.to_string(),
            modality,
            language: language.to_string(),
            vector,
        });
    }

    Ok(Corpus {
        records,
        face_dim,
        voice_dim,
        languages,
    })
}

/// Serializes a corpus to the CSV format with 17-significant-digit
/// coordinates, so `parse_corpus(&write_corpus(&c))` reproduces `c` exactly.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::with_capacity(64 * (corpus.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in corpus.records() {
        out.push_str(&rec.sample_id);
        out.push(',');
        out.push_str(&rec.identity);
        out.push(',');
        out.push_str(rec.modality.as_str());
        out.push(',');
        out.push_str(&rec.language);
        for v in &rec.vector {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, identity: &str, modality: Modality, lang: &str, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            sample_id: id.into(),
            identity: identity.into(),
            modality,
            language: lang.into(),
            vector: v.to_vec(),
        }
    }

    fn small_corpus() -> Corpus {
        Corpus::from_records(vec![
            rec("f1", "alice", Modality::Face, "E", &[1.0, 2.0]),
            rec("v1", "alice", Modality::Voice, "E", &[0.5, -0.5, 0.25]),
            rec("f2", "bob", Modality::Face, "U", &[3.0, 4.0]),
            rec("v2", "bob", Modality::Voice, "U", &[0.1, 0.2, 0.3]),
        ])
        .unwrap()
    }

    #[test]
    fn from_records_infers_dims_and_languages() {
        let c = small_corpus();
        assert_eq!(c.face_dim(), Some(2));
        assert_eq!(c.voice_dim(), Some(3));
        let langs: Vec<&str> = c.languages().iter().map(|s| s.as_str()).collect();
        assert_eq!(langs, ["E", "U"]);
        let ids: Vec<&str> = c.identities().into_iter().collect();
        assert_eq!(ids, ["alice", "bob"]);
    }

    #[test]
    fn from_records_rejects_bad_input() {
        let err = Corpus::from_records(vec![rec("a b", "x", Modality::Face, "E", &[1.0])])
            .unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");

        let err = Corpus::from_records(vec![
            rec("a", "x", Modality::Face, "E", &[1.0]),
            rec("a", "y", Modality::Face, "E", &[2.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");

        let err = Corpus::from_records(vec![rec("a", "x", Modality::Face, "E", &[])]).unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");

        let err = Corpus::from_records(vec![rec("a", "x", Modality::Face, "E", &[f64::NAN])])
            .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");

        let err = Corpus::from_records(vec![
            rec("a", "x", Modality::Face, "E", &[1.0, 2.0]),
            rec("b", "x", Modality::Face, "E", &[1.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
    }

    #[test]
    fn empty_corpus_round_trips_as_bare_header() {
        let c = Corpus::from_records(vec![]).unwrap();
        let text = write_corpus(&c);
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        let back = parse_corpus(&text).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.face_dim(), None);
        assert_eq!(back.voice_dim(), None);
    }

    #[test]
    fn parse_rejects_bad_header() {
        let err = parse_corpus("").unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
        let err = parse_corpus("sample_id,identity,modality,language\n").unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn parse_errors_cite_line_numbers() {
        let text = format!("{CSV_HEADER}\nf1,alice,face,E,1.0,2.0\nf2,bob,face,E,oops,4.0\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Row { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("coordinate 1"), "{msg}");
            }
            other => panic!("expected row error, got {other}"),
        }

        let text = format!("{CSV_HEADER}\nf1,alice,face,E,1.0\nf1,bob,face,E,2.0\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Duplicate { id, line } => {
                assert_eq!(id, "f1");
                assert_eq!(line, 3);
            }
            other => panic!("expected duplicate error, got {other}"),
        }
    }

    #[test]
    fn parse_rejects_short_rows_and_bad_labels() {
        let text = format!("{CSV_HEADER}\nf1,alice,face,E\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Row { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("at least 5"), "{msg}");
            }
            other => panic!("expected row error, got {other}"),
        }

        let text = format!("{CSV_HEADER}\nf 1,alice,face,E,1.0\n");
        assert!(matches!(
            parse_corpus(&text).unwrap_err(),
            Error::Row { line: 2, .. }
        ));

        let text = format!("{CSV_HEADER}\nf1,alice,audio,E,1.0\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Row { msg, .. } => assert!(msg.contains("modality"), "{msg}"),
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn parse_rejects_non_finite_and_dim_drift() {
        let text = format!("{CSV_HEADER}\nf1,alice,face,E,inf\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Row { msg, .. } => assert!(msg.contains("not finite"), "{msg}"),
            other => panic!("expected row error, got {other}"),
        }

        let text = format!("{CSV_HEADER}\nf1,alice,face,E,1.0,2.0\nf2,bob,face,E,1.0\n");
        match parse_corpus(&text).unwrap_err() {
            Error::Row { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("expected 2"), "{msg}");
            }
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn face_and_voice_dims_are_independent() {
        let text = format!("{CSV_HEADER}\nf1,alice,face,E,1.0,2.0\nv1,alice,voice,E,1.0,2.0,3.0\n");
        let c = parse_corpus(&text).unwrap();
        assert_eq!(c.face_dim(), Some(2));
        assert_eq!(c.voice_dim(), Some(3));
    }

    #[test]
    fn filter_by_each_axis() {
        let c = small_corpus();
        let faces = c.filter(None, Some(Modality::Face), None);
        assert_eq!(faces.len(), 2);
        assert!(faces.records().iter().all(|r| r.modality == Modality::Face));
        assert_eq!(faces.face_dim(), Some(2));
        assert_eq!(faces.voice_dim(), Some(3));

        let e_only = c.filter(Some("E"), None, None);
        assert_eq!(e_only.len(), 2);
        assert_eq!(e_only.languages().len(), 1);

        let mut just_bob = BTreeSet::new();
        just_bob.insert("bob".to_string());
        let bob = c.filter(None, None, Some(&just_bob));
        assert_eq!(bob.len(), 2);
        assert!(bob.records().iter().all(|r| r.identity == "bob"));

        let nothing = c.filter(Some("Z"), None, None);
        assert!(nothing.is_empty());
        assert!(nothing.languages().is_empty());
    }

    #[test]
    fn select_preserves_order() {
        let c = small_corpus();
        let all = c.select(None, None, None);
        let ids: Vec<&str> = all.iter().map(|r| r.sample_id.as_str()).collect();
        assert_eq!(ids, ["f1", "v1", "f2", "v2"]);
    }

    #[test]
    fn round_trip_preserves_exact_values() {
        let c = Corpus::from_records(vec![
            rec("a", "x", Modality::Face, "E", &[0.1, 1e-300, -2.5e17]),
            rec(
                "b",
                "x",
                Modality::Voice,
                "E",
                &[std::f64::consts::PI, -0.0, 4.9e-324_f64.max(f64::MIN_POSITIVE)],
            ),
        ])
        .unwrap();
        let text = write_corpus(&c);
        let back = parse_corpus(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(write_corpus(&back), text);
    }

    // ── property tests ──────────────────────────────────────────────────

    fn label_strategy() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[A-Za-z0-9_-]{1,8}").unwrap()
    }

    fn coord_strategy() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6_f64,
            prop_oneof![Just(0.0), Just(-0.0), Just(1e-300), Just(-1e300), Just(0.1)],
        ]
    }

    fn corpus_strategy() -> impl Strategy<Value = Corpus> {
        let record = (
            label_strategy(),
            prop_oneof![Just(Modality::Face), Just(Modality::Voice)],
            label_strategy(),
            proptest::collection::vec(coord_strategy(), 3),
        );
        proptest::collection::vec(record, 0..20).prop_map(|rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (identity, modality, language, vector))| EmbeddingRecord {
                    sample_id: format!("s{i}"),
                    identity,
                    modality,
                    language,
                    vector,
                })
                .collect();
            Corpus::from_records(records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn prop_round_trip(c in corpus_strategy()) {
            let text = write_corpus(&c);
            let back = parse_corpus(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(write_corpus(&back), text);
        }

        #[test]
        fn prop_filter_is_idempotent_and_shrinking(
            c in corpus_strategy(),
            lang in proptest::option::of(label_strategy()),
            modality in proptest::option::of(prop_oneof![Just(Modality::Face), Just(Modality::Voice)]),
        ) {
            let once = c.filter(lang.as_deref(), modality, None);
            let twice = once.filter(lang.as_deref(), modality, None);
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.len() <= c.len());
            let source_ids: BTreeSet<&str> =
                c.records().iter().map(|r| r.sample_id.as_str()).collect();
            for r in once.records() {
                prop_assert!(source_ids.contains(r.sample_id.as_str()));
            }
        }
    }
}
