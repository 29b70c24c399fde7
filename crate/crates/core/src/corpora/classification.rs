use std::fs::File;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{
    collapse_whitespace, display, ClassificationCorpus, DatasetId, LoadOptions, LoadReport,
};
use crate::error::{Error, Result};

/// Emotion label inventory in class-index order.
pub const EMOTIONS: [&str; 7] = [
    "joy", "sadness", "fear", "anger", "guilt", "disgust", "shame",
];

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]+>").expect("static regex"));
static NO_RESPONSE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\[?\s*no response\.?\s*\]?$").expect("static regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentSchema {
    Imdb,
    Twitter,
}

impl FromStr for SentimentSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imdb" => Ok(SentimentSchema::Imdb),
            "twitter" => Ok(SentimentSchema::Twitter),
            other => Err(Error::Config(format!("unknown sentiment schema `{other}`"))),
        }
    }
}

impl SentimentSchema {
    fn text_columns(self) -> &'static [&'static str] {
        match self {
            SentimentSchema::Imdb => &["review", "text"],
            SentimentSchema::Twitter => &["sentimenttext", "text", "tweet", "content"],
        }
    }

    fn label_columns(self) -> &'static [&'static str] {
        match self {
            SentimentSchema::Imdb => &["sentiment", "label"],
            SentimentSchema::Twitter => &["sentiment", "label", "polarity", "target"],
        }
    }
}

fn read_csv(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .from_reader(file))
}

fn lossy(field: &[u8]) -> String {
    String::from_utf8_lossy(field).into_owned()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: display(path),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn parse_binary_label(raw: &str) -> Option<usize> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "0" | "neg" | "negative" => Some(0),
        "1" | "pos" | "positive" => Some(1),
        _ => None,
    }
}

/// Load a two-class sentiment CSV with a header row. Labels map to
/// `0 = negative`, `1 = positive`; rows with empty text are dropped.
pub fn load_sentiment(
    path: impl AsRef<Path>,
    schema: SentimentSchema,
    opts: LoadOptions,
) -> Result<ClassificationCorpus> {
    let path = path.as_ref();
    let mut reader = read_csv(path, true)?;
    let headers: Vec<String> = reader
        .byte_headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| lossy(h).trim().trim_start_matches('\u{feff}').to_owned())
        .collect();
    let find = |candidates: &[&str]| {
        candidates
            .iter()
            .find_map(|c| headers.iter().position(|h| h.eq_ignore_ascii_case(c)))
    };
    let (Some(text_col), Some(label_col)) =
        (find(schema.text_columns()), find(schema.label_columns()))
    else {
        return Err(Error::Parse {
            path: display(path),
            line: 1,
            message: format!(
                "unrecognized column layout for {schema:?}; found headers {headers:?}"
            ),
        });
    };

    let mut texts = Vec::new();
    let mut labels = Vec::new();
    let mut report = LoadReport::default();
    for record in reader.byte_records() {
        if opts.reached(texts.len()) {
            break;
        }
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        report.rows_read += 1;
        let raw_text = record.get(text_col).map(lossy).unwrap_or_default();
        let raw_label = record.get(label_col).map(lossy).unwrap_or_default();
        let text = match schema {
            SentimentSchema::Imdb => collapse_whitespace(&HTML_TAG.replace_all(&raw_text, " ")),
            SentimentSchema::Twitter => collapse_whitespace(&raw_text),
        };
        if text.is_empty() {
            report.rows_dropped += 1;
            continue;
        }
        let label = parse_binary_label(&raw_label).ok_or_else(|| Error::Parse {
            path: display(path),
            line,
            message: format!("label `{raw_label}` is not one of 0/1/pos/neg/positive/negative"),
        })?;
        texts.push(text);
        labels.push(label);
        report.rows_kept += 1;
    }
    let source = match schema {
        SentimentSchema::Imdb => DatasetId::Imdb,
        SentimentSchema::Twitter => DatasetId::Twitter,
    };
    Ok(ClassificationCorpus {
        texts,
        labels,
        label_names: vec!["negative".into(), "positive".into()],
        source,
        report,
    })
}

/// Headerless (or `label,text` headed) emotion file with the seven ISEAR
/// labels. Placeholder answers such as `[ No response.]` and texts shorter
/// than two characters are dropped.
pub fn load_isear(path: impl AsRef<Path>, opts: LoadOptions) -> Result<ClassificationCorpus> {
    let path = path.as_ref();
    let mut reader = read_csv(path, false)?;
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    let mut report = LoadReport::default();
    let mut first = true;
    for record in reader.byte_records() {
        if opts.reached(texts.len()) {
            break;
        }
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw_label = record.get(0).map(lossy).unwrap_or_default();
        let label_key = raw_label.trim().to_ascii_lowercase();
        let is_header =
            first && matches!(label_key.as_str(), "emotion" | "label" | "class" | "field1");
        first = false;
        if is_header {
            continue;
        }
        report.rows_read += 1;
        let label = EMOTIONS
            .iter()
            .position(|e| *e == label_key)
            .ok_or_else(|| Error::Parse {
                path: display(path),
                line,
                message: format!("emotion `{raw_label}` is not one of {EMOTIONS:?}"),
            })?;
        let text = collapse_whitespace(&record.get(1).map(lossy).unwrap_or_default());
        if text.chars().count() < 2 || NO_RESPONSE.is_match(&text) {
            report.rows_dropped += 1;
            continue;
        }
        texts.push(text);
        labels.push(label);
        report.rows_kept += 1;
    }
    Ok(ClassificationCorpus {
        texts,
        labels,
        label_names: EMOTIONS.iter().map(|s| s.to_string()).collect(),
        source: DatasetId::Isear,
        report,
    })
}

/// Two-column `text,category` banking query file. Intent names are indexed
/// in first-seen order; duplicates are kept.
pub fn load_banking(path: impl AsRef<Path>, opts: LoadOptions) -> Result<ClassificationCorpus> {
    let path = path.as_ref();
    let mut reader = read_csv(path, false)?;

    let mut texts = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut report = LoadReport::default();
    let mut first = true;
    for record in reader.byte_records() {
        if opts.reached(texts.len()) {
            break;
        }
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let text = collapse_whitespace(&record.get(0).map(lossy).unwrap_or_default());
        let intent = record
            .get(1)
            .map(lossy)
            .unwrap_or_default()
            .trim()
            .to_owned();
        let is_header = first
            && text.eq_ignore_ascii_case("text")
            && matches!(
                intent.to_ascii_lowercase().as_str(),
                "category" | "intent" | "label"
            );
        first = false;
        if is_header {
            continue;
        }
        report.rows_read += 1;
        if intent.is_empty() {
            return Err(Error::Parse {
                path: display(path),
                line,
                message: "empty intent name".into(),
            });
        }
        if text.is_empty() {
            report.rows_dropped += 1;
            continue;
        }
        let label = match names.iter().position(|n| *n == intent) {
            Some(i) => i,
            None => {
                names.push(intent);
                names.len() - 1
            }
        };
        texts.push(text);
        labels.push(label);
        report.rows_kept += 1;
    }
    Ok(ClassificationCorpus {
        texts,
        labels,
        label_names: names,
        source: DatasetId::Banking77,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn imdb_fixture() {
        let f = file(
            "review,sentiment\n\
             \"Great movie.<br /><br />Loved it\",positive\n\
             \"Awful, boring\",negative\n\
             \"A delight\",positive\n\
             \"Waste of time\",negative\n",
        );
        let c = load_sentiment(f.path(), SentimentSchema::Imdb, LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.labels, [1, 0, 1, 0]);
        assert_eq!(c.texts[0], "Great movie. Loved it");
        assert_eq!(
            c.report.rows_read,
            c.report.rows_kept + c.report.rows_dropped
        );
    }

    #[test]
    fn empty_text_dropped_and_counted() {
        let f = file("SentimentText,Sentiment\nhello there,1\n   ,0\nbad day,0\n");
        let c = load_sentiment(f.path(), SentimentSchema::Twitter, LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.report.rows_dropped, 1);
        assert_eq!(c.report.rows_read, 3);
    }

    #[test]
    fn bad_label_names_row() {
        let f = file("review,sentiment\nok,positive\nhmm,meh\n");
        match load_sentiment(f.path(), SentimentSchema::Imdb, LoadOptions::default()).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("meh"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_layout_lists_headers() {
        let f = file("foo,bar\n1,2\n");
        let err =
            load_sentiment(f.path(), SentimentSchema::Imdb, LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn isear_drops_placeholders() {
        let f = file(
            "joy,When I passed my exam\nguilt,[ No response.]\nshame,x\nfear,A dog chased me\n",
        );
        let c = load_isear(f.path(), LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.report.rows_dropped, 2);
        assert_eq!(c.label_names.len(), 7);
        assert_eq!(c.labels, [0, 2]);
    }

    #[test]
    fn isear_rejects_unknown_emotion() {
        let f = file("joy,fine\nboredom,nothing happened\n");
        assert!(matches!(
            load_isear(f.path(), LoadOptions::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn banking_first_seen_order_and_duplicates() {
        let f = file(
            "text,category\n\
             My card is not working,card_not_working\n\
             I lost my phone,lost_or_stolen_phone\n\
             My card is not working,card_not_working\n",
        );
        let c = load_banking(f.path(), LoadOptions::default()).unwrap();
        assert_eq!(c.label_names, ["card_not_working", "lost_or_stolen_phone"]);
        assert_eq!(c.labels, [0, 1, 0]);
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn banking_empty_intent() {
        let f = file("text,category\nhello,\n");
        assert!(matches!(
            load_banking(f.path(), LoadOptions::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn row_limit() {
        let f = file("review,sentiment\na,1\nb,0\nc,1\n");
        let c =
            load_sentiment(f.path(), SentimentSchema::Imdb, LoadOptions::limit(Some(2))).unwrap();
        assert_eq!(c.len(), 2);
    }
}
