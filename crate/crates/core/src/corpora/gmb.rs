use std::fs::File;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::{display, tag_inventory, LoadOptions, LoadReport, TaggedCorpus};
use crate::error::{Error, Result};

static TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(O|[BI]-[a-z]{3})$").expect("static regex"));

/// `O`, or `B-`/`I-` followed by a three-letter lowercase entity class.
pub fn is_valid_tag(tag: &str) -> bool {
    TAG.is_match(tag)
}

/// Load the token-per-row GMB layout (`Sentence #, Word, POS, Tag`). The
/// sentence column is only set on the first token of each sentence and is
/// forward-filled. `opts.limit` counts sentences.
pub fn load_gmb(path: impl AsRef<Path>, opts: LoadOptions) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers: Vec<String> = reader
        .byte_headers()
        .map_err(|e| Error::Parse {
            path: display(path),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| {
            String::from_utf8_lossy(h)
                .trim()
                .trim_start_matches('\u{feff}')
                .to_ascii_lowercase()
        })
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(sent_col), Some(word_col), Some(tag_col)) =
        (col("sentence #"), col("word"), col("tag"))
    else {
        return Err(Error::Parse {
            path: display(path),
            line: 1,
            message: format!("expected columns `Sentence #, Word, POS, Tag`; found {headers:?}"),
        });
    };

    let mut sentences: Vec<Vec<String>> = Vec::new();
    let mut tag_sequences: Vec<Vec<String>> = Vec::new();
    let mut current: Option<String> = None;
    let mut rows_read = 0;
    for record in reader.byte_records() {
        let record = record.map_err(|e| Error::Parse {
            path: display(path),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| {
            record
                .get(i)
                .map(|b| String::from_utf8_lossy(b).trim().to_owned())
                .unwrap_or_default()
        };
        let sentence_id = field(sent_col);
        if !sentence_id.is_empty() && current.as_deref() != Some(sentence_id.as_str()) {
            if opts.reached(sentences.len()) {
                break;
            }
            current = Some(sentence_id);
            sentences.push(Vec::new());
            tag_sequences.push(Vec::new());
        } else if current.is_none() {
            return Err(Error::Parse {
                path: display(path),
                line,
                message: "token row before any sentence id".into(),
            });
        }
        rows_read += 1;
        let tag = field(tag_col);
        if !is_valid_tag(&tag) {
            return Err(Error::Parse {
                path: display(path),
                line,
                message: format!("tag `{tag}` is not in the B-/I-/O scheme"),
            });
        }
        let word = field(word_col);
        sentences.last_mut().expect("sentence opened").push(word);
        tag_sequences.last_mut().expect("sentence opened").push(tag);
    }

    let tag_names = tag_inventory(&tag_sequences);
    Ok(TaggedCorpus {
        sentences,
        tag_sequences,
        tag_names,
        report: LoadReport {
            rows_read,
            rows_kept: rows_read,
            rows_dropped: 0,
        },
    })
}
