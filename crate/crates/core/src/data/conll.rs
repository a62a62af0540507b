use crate::data::{AddressSample, TagSchema, MAX_SEQ_LEN};
use crate::error::{Error, Result};
use crate::turkish_text::turkish_lowercase;

/// Parse two-column CoNLL text into samples.
///
/// Columns may be separated by any run of whitespace; a blank line ends a
/// sample and a missing trailing blank line is tolerated. Tokens are
/// normalized with [`turkish_lowercase`]. Line and column numbers in errors
/// are 1-based; sample indices are 0-based.
pub fn parse_conll(bytes: &[u8], schema: &TagSchema) -> Result<Vec<AddressSample>> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let prefix = &bytes[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        Error::Parse {
            line,
            column: e.valid_up_to() - line_start + 1,
            message: "invalid UTF-8".into(),
        }
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut samples = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();

    let flush = |samples: &mut Vec<AddressSample>,
                 tokens: &mut Vec<_>,
                 tags: &mut Vec<_>|
     -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let sample = AddressSample::new(std::mem::take(tokens), std::mem::take(tags), schema)
            .map_err(|e| Error::Schema {
                sample: samples.len(),
                message: e.to_string(),
            })?;
        samples.push(sample);
        Ok(())
    };

    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            flush(&mut samples, &mut tokens, &mut tags)?;
            continue;
        }
        let mut fields = Vec::with_capacity(2);
        let mut rest = line;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            let column = line[..offset + start].chars().count() + 1;
            fields.push((column, &tail[..len]));
            offset += start + len;
            rest = &rest[start + len..];
        }
        match fields.as_slice() {
            [(_, token), (column, tag)] => {
                let id = schema.tag_id(tag).ok_or_else(|| Error::Parse {
                    line: line_no,
                    column: *column,
                    message: format!("unknown tag `{tag}`"),
                })?;
                tokens.push(turkish_lowercase(token));
                tags.push(id);
                if tokens.len() > MAX_SEQ_LEN {
                    return Err(Error::Schema {
                        sample: samples.len(),
                        message: format!("sample exceeds {MAX_SEQ_LEN} tokens"),
                    });
                }
            }
            [(column, _)] => {
                return Err(Error::Parse {
                    line: line_no,
                    column: column + line.trim_start().chars().count(),
                    message: "missing tag column".into(),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    column: fields[2].0,
                    message: format!("expected 2 columns, found {}", fields.len()),
                })
            }
        }
    }
    flush(&mut samples, &mut tokens, &mut tags)?;
    Ok(samples)
}

/// Serialize samples as `token<TAB>tag` lines with a blank line after each
/// sample. No BOM.
pub fn write_conll(samples: &[AddressSample], schema: &TagSchema) -> Vec<u8> {
    let mut out = String::new();
    for sample in samples {
        for (token, tag) in sample.tokens().iter().zip(sample.tags()) {
            out.push_str(token);
            out.push('\t');
            out.push_str(schema.tag_name(*tag));
            out.push('\n');
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_schema;

    #[test]
    fn parse_examples() {
        let s = default_schema();
        let samples = parse_conll(b"nike\tB-POI\nstore\tI-POI\n\n", &s).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].len(), 2);
        assert!(parse_conll(b"", &s).unwrap().is_empty());
        match parse_conll(b"tok\n\n", &s) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tolerant_whitespace_and_normalization() {
        let s = default_schema();
        let text = "İSTANBUL   B-CITY\r\nKadıköy \t B-DISTRICT\n   \nBIM B-POI";
        let samples = parse_conll(text.as_bytes(), &s).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].tokens()[0].as_str(), "istanbul");
        assert_eq!(samples[1].tokens()[0].as_str(), "bım");
    }

    #[test]
    fn diagnostics() {
        let s = default_schema();
        match parse_conll(b"a\tO\nb\tB-NOPE\n", &s) {
            Err(Error::Parse { line: 2, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_conll(b"a O extra\n", &s) {
            Err(Error::Parse { line: 1, column: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_conll(b"a\tO\n\nb\tO\nc\tI-CITY\n", &s) {
            Err(Error::Schema { sample: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_conll(b"a\tO\n\xff\tO\n", &s) {
            Err(Error::Parse { line: 2, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_examples() {
        let s = default_schema();
        let a = AddressSample::from_strs(&["a"], &["O"], &s).unwrap();
        assert_eq!(write_conll(&[a], &s), b"a\tO\n\n");
        assert!(write_conll(&[], &s).is_empty());
    }

    #[test]
    fn overlong_sample_is_a_schema_error() {
        let s = default_schema();
        let mut text = String::from("a\tO\n\n");
        for _ in 0..=MAX_SEQ_LEN {
            text.push_str("x\tO\n");
        }
        match parse_conll(text.as_bytes(), &s) {
            Err(Error::Schema { sample: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
