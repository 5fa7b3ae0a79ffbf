//! CoNLL-U reading and writing.
//!
//! Only the ID, FORM, LEMMA, UPOS, HEAD and DEPREL columns are retained.
//! Multiword token ranges (`3-4`) and empty nodes (`3.1`) are skipped.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One token of a dependency-parsed sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Governing token id, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(
        id: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.head == 0
    }
}

/// A validated dependency tree: ids are `1..=n`, exactly one root, and
/// every head chain terminates at the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceTree {
    tokens: Vec<Token>,
    text: String,
}

impl SentenceTree {
    /// Validates `tokens` and builds a tree. The error is a human-readable
    /// description of the first violated constraint.
    pub fn new(tokens: Vec<Token>, text: impl Into<String>) -> std::result::Result<Self, String> {
        validate_tokens(&tokens)?;
        Ok(SentenceTree {
            tokens,
            text: text.into(),
        })
    }

    /// Builds a tree whose text is the forms joined by single spaces.
    pub fn from_tokens(tokens: Vec<Token>) -> std::result::Result<Self, String> {
        let text = join_forms(&tokens);
        Self::new(tokens, text)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|idx| self.tokens.get(idx))
    }

    pub fn root(&self) -> &Token {
        self.tokens
            .iter()
            .find(|t| t.is_root())
            .expect("validated tree has a root")
    }

    /// Token ids from `id` up to and including the root.
    pub fn path_to_root(&self, id: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut current = id;
        while let Some(token) = self.token(current) {
            path.push(current);
            current = token.head;
        }
        path
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == id)
    }
}

fn join_forms(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
}

fn validate_tokens(tokens: &[Token]) -> std::result::Result<(), String> {
    if tokens.is_empty() {
        return Err("sentence has no tokens".to_string());
    }
    let n = tokens.len();
    for (idx, token) in tokens.iter().enumerate() {
        if token.id != idx + 1 {
            return Err(format!(
                "token ids must be consecutive from 1, found {} at position {}",
                token.id,
                idx + 1
            ));
        }
        if token.upos.is_empty() {
            return Err(format!("token {} has an empty UPOS", token.id));
        }
        if token.deprel.is_empty() {
            return Err(format!("token {} has an empty DEPREL", token.id));
        }
        if token.head == token.id {
            return Err(format!("token {} is its own head", token.id));
        }
        if token.head > n {
            return Err(format!(
                "token {} has head {} which does not exist",
                token.id, token.head
            ));
        }
    }

    let roots: Vec<usize> = tokens.iter().filter(|t| t.is_root()).map(|t| t.id).collect();
    match roots.len() {
        0 => return Err("sentence has no root".to_string()),
        1 => {}
        _ => return Err(format!("sentence has {} roots (tokens {:?})", roots.len(), roots)),
    }

    // With a single root and in-range heads, a chain longer than n means a cycle.
    for token in tokens {
        let mut current = token.head;
        let mut steps = 0;
        while current != 0 {
            steps += 1;
            if steps > n {
                return Err(format!("token {} is part of a head cycle", token.id));
            }
            current = tokens[current - 1].head;
        }
    }
    Ok(())
}

/// A parsed sentence together with its `# key = value` comments.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceBlock {
    /// 1-based line number of the first line of the block.
    pub line: usize,
    pub metadata: Vec<(String, String)>,
    pub tree: SentenceTree,
}

impl SentenceBlock {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses every sentence in `reader`, failing on the first problem.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<SentenceTree>> {
    Ok(parse_blocks(reader)?.into_iter().map(|b| b.tree).collect())
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<SentenceTree>> {
    parse_conllu(text.as_bytes())
}

/// Parses every sentence block, keeping comment metadata.
pub fn parse_blocks<R: BufRead>(reader: R) -> Result<Vec<SentenceBlock>> {
    let (blocks, mut findings) = check_blocks(reader);
    if findings.is_empty() {
        Ok(blocks)
    } else {
        Err(findings.swap_remove(0))
    }
}

/// Parses as much as possible, returning the well-formed blocks and one
/// error per malformed block. I/O errors end the scan.
pub fn check_blocks<R: BufRead>(reader: R) -> (Vec<SentenceBlock>, Vec<Error>) {
    let mut blocks = Vec::new();
    let mut findings = Vec::new();
    let mut pending = RawBlock::default();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                findings.push(Error::Parse {
                    line: line_no,
                    msg: format!("read failed: {e}"),
                });
                return (blocks, findings);
            }
        };
        let line = line.trim_end_matches('\r');

        if line.trim().is_empty() {
            pending.finish(&mut blocks, &mut findings);
            continue;
        }
        if pending.start == 0 {
            pending.start = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                pending
                    .metadata
                    .push((key.trim().to_string(), value.trim().to_string()));
            }
            continue;
        }
        match parse_token_line(line, line_no) {
            Ok(Some(token)) => pending.tokens.push(token),
            Ok(None) => {}
            Err(e) => {
                if pending.error.is_none() {
                    pending.error = Some(e);
                }
            }
        }
    }
    pending.finish(&mut blocks, &mut findings);
    (blocks, findings)
}

#[derive(Default)]
struct RawBlock {
    start: usize,
    metadata: Vec<(String, String)>,
    tokens: Vec<Token>,
    error: Option<Error>,
}

impl RawBlock {
    fn finish(&mut self, blocks: &mut Vec<SentenceBlock>, findings: &mut Vec<Error>) {
        let raw = std::mem::take(self);
        if raw.start == 0 {
            return;
        }
        if let Some(e) = raw.error {
            findings.push(e);
            return;
        }
        let text = raw
            .metadata
            .iter()
            .find(|(k, _)| k == "text")
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| join_forms(&raw.tokens));
        let label = raw
            .metadata
            .iter()
            .find(|(k, _)| k == "sent_id")
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| text.clone());
        match SentenceTree::new(raw.tokens, text) {
            Ok(tree) => blocks.push(SentenceBlock {
                line: raw.start,
                metadata: raw.metadata,
                tree,
            }),
            Err(msg) => findings.push(Error::InvalidSentence {
                line: raw.start,
                sentence: label,
                msg,
            }),
        }
    }
}

fn parse_token_line(line: &str, line_no: usize) -> Result<Option<Token>> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
        });
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        return Ok(None);
    }
    let id: usize = id_col.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("non-numeric token id {id_col:?}"),
    })?;
    if id == 0 {
        return Err(Error::Parse {
            line: line_no,
            msg: "token id must be at least 1".to_string(),
        });
    }
    let head: usize = cols[6].parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("non-numeric head {:?}", cols[6]),
    })?;
    Ok(Some(Token::new(id, cols[1], cols[2], cols[3], head, cols[7])))
}

/// Writes one sentence block with the given comments and a `# text` line.
pub fn write_block<W: Write>(out: &mut W, metadata: &[(&str, &str)], tree: &SentenceTree) -> std::io::Result<()> {
    for (key, value) in metadata {
        writeln!(out, "# {key} = {value}")?;
    }
    writeln!(out, "# text = {}", tree.text())?;
    for t in tree.tokens() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
            t.id, t.form, t.lemma, t.upos, t.head, t.deprel
        )?;
    }
    writeln!(out)
}

pub fn write_conllu<W: Write>(out: &mut W, trees: &[SentenceTree]) -> std::io::Result<()> {
    for tree in trees {
        write_block(out, &[], tree)?;
    }
    Ok(())
}

pub fn to_conllu_string(trees: &[SentenceTree]) -> String {
    let mut buf = Vec::new();
    write_conllu(&mut buf, trees).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CoNLL-U output is UTF-8")
}
