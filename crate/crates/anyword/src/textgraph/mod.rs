//! Parsing of referring expressions into the linguistic structure the prompt
//! regularizers consume: entities (root nouns with attribute nouns and
//! adjective links), predicates, and mutual-exclusion sets. Also generates
//! mutated synonym expressions for the stability study.

mod lexicon;
pub mod llm;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{LlmTransport, PARSING_PROMPT_TEMPLATE, SYNONYM_PROMPT_TEMPLATE};

/// Part-of-speech classes exposed on tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Adj,
    Verb,
    Other,
}

/// A single token of the expression. Indices are 0-based positions in the
/// tokenized expression, gapless and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    pub pos_tag: PosTag,
}

/// An adjective together with the index of the noun token it modifies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectiveLink {
    pub token: Token,
    /// Token index of the modified noun (the entity root or one of its
    /// attribute nouns).
    pub modifies: usize,
}

/// A visual entity: a root noun plus its attribute nouns (nested noun-phrase
/// members such as a garment inside the head phrase) and adjective links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub root_token: Token,
    pub adjectives: Vec<AdjectiveLink>,
    pub attribute_nouns: Vec<Token>,
    /// Inclusive token-index range covered by the entity phrase.
    pub phrase_span: (usize, usize),
}

impl Entity {
    /// Token indices that carry this entity's visual concepts: root,
    /// attribute nouns, and linked adjectives.
    pub fn concept_token_indices(&self) -> Vec<usize> {
        let mut out = vec![self.root_token.index];
        out.extend(self.attribute_nouns.iter().map(|t| t.index));
        out.extend(self.adjectives.iter().map(|a| a.token.index));
        out.sort_unstable();
        out
    }

    /// Surface text of the phrase span, used as the inherited mask label.
    pub fn label(&self, tokens: &[Token]) -> String {
        tokens[self.phrase_span.0..=self.phrase_span.1]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Full parse of a referring expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedExpression {
    pub tokens: Vec<Token>,
    pub entities: Vec<Entity>,
    pub predicates: Vec<Token>,
    /// `exclusion_sets[i]` holds every entity id other than `i`.
    pub exclusion_sets: Vec<BTreeSet<usize>>,
}

impl ParsedExpression {
    /// Indices of tokens whose embeddings are trainable: entity roots,
    /// attribute nouns, and linked adjectives.
    pub fn trainable_token_indices(&self) -> BTreeSet<usize> {
        self.entities
            .iter()
            .flat_map(|e| e.concept_token_indices())
            .collect()
    }
}

/// External POS tagger hook: supplies `(surface, tag)` pairs for a text.
pub trait ExternalTagger: Send + Sync {
    fn tag(&self, text: &str) -> Result<Vec<(String, PosTag)>, String>;
}

/// Parser backend selection.
#[derive(Clone)]
pub enum ParserBackend {
    /// Deterministic, dependency-free lexicon + suffix rules.
    BuiltinRules,
    /// Tags supplied by an external tool; chunking stays rule-based.
    ExternalTagger(Arc<dyn ExternalTagger>),
    /// Prompted language model returning `[(attr, ...), object]` replies.
    LlmPrompted {
        prompt_template: String,
        transport: Arc<dyn LlmTransport>,
    },
}

impl ParserBackend {
    /// LLM backend with the default parsing prompt.
    pub fn llm(transport: Arc<dyn LlmTransport>) -> Self {
        Self::LlmPrompted {
            prompt_template: PARSING_PROMPT_TEMPLATE.to_string(),
            transport,
        }
    }
}

impl std::fmt::Debug for ParserBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::BuiltinRules => write!(f, "BuiltinRules"),
            Self::ExternalTagger(_) => write!(f, "ExternalTagger"),
            Self::LlmPrompted { .. } => write!(f, "LlmPrompted"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("expression is empty after whitespace normalization")]
    EmptyExpression,
    #[error("no noun token found in expression {0:?}")]
    NoEntityFound(String),
    #[error("parser backend unavailable: {reason}; raw reply: {raw_reply:?}")]
    BackendUnavailable {
        reason: String,
        raw_reply: Option<String>,
    },
    #[error("synonym source has {available} candidates for {word:?}, {requested} requested")]
    InsufficientSynonyms {
        word: String,
        available: usize,
        requested: usize,
    },
}

/// Synonym source for the rule-based mutation backend.
#[derive(Debug, Clone)]
pub struct SynonymTable {
    entries: std::collections::BTreeMap<String, Vec<String>>,
}

impl Default for SynonymTable {
    fn default() -> Self {
        let mut entries = std::collections::BTreeMap::new();
        for (word, syns) in lexicon::SYNONYMS {
            entries.insert(
                (*word).to_string(),
                syns.iter().map(|s| (*s).to_string()).collect(),
            );
        }
        Self { entries }
    }
}

impl SynonymTable {
    pub fn empty() -> Self {
        Self {
            entries: std::collections::BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, word: &str, synonyms: &[&str]) {
        self.entries.insert(
            word.to_lowercase(),
            synonyms.iter().map(|s| (*s).to_string()).collect(),
        );
    }

    pub fn candidates(&self, word: &str) -> &[String] {
        self.entries
            .get(&word.to_lowercase())
            .map_or(&[][..], Vec::as_slice)
    }
}

// ---------------------------------------------------------------------------
// Tokenization and tagging
// ---------------------------------------------------------------------------

/// Internal tag with the chunking detail the public `PosTag` collapses away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChunkTag {
    Det,
    /// Preposition binding the next noun phrase to the previous entity.
    PrepAttribute,
    /// Preposition introducing a separate entity.
    PrepSpatial,
    Noun,
    Adj,
    Verb,
    Other,
}

impl ChunkTag {
    fn public(self) -> PosTag {
        match self {
            ChunkTag::Noun => PosTag::Noun,
            ChunkTag::Adj => PosTag::Adj,
            ChunkTag::Verb => PosTag::Verb,
            _ => PosTag::Other,
        }
    }
}

fn word_in(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

/// Try to reduce a plural surface form to a lexicon entry.
fn singularize(word: &str) -> Option<String> {
    if let Some(stem) = word.strip_suffix("ies") {
        if !stem.is_empty() {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if !stem.is_empty() {
            return Some(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.is_empty() && !stem.ends_with('s') {
            return Some(stem.to_string());
        }
    }
    None
}

fn tag_word(raw: &str) -> ChunkTag {
    let word = raw.to_lowercase();
    let word = word.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'');

    // Possessives mark the owner as a modifier of the following noun.
    if word.ends_with("'s") || word.ends_with("s'") {
        return ChunkTag::Adj;
    }

    let lookup = |w: &str| -> Option<ChunkTag> {
        if word_in(lexicon::DETERMINERS, w) {
            Some(ChunkTag::Det)
        } else if word_in(lexicon::ATTRIBUTE_PREPOSITIONS, w) {
            Some(ChunkTag::PrepAttribute)
        } else if word_in(lexicon::SPATIAL_PREPOSITIONS, w) {
            Some(ChunkTag::PrepSpatial)
        } else if word_in(lexicon::FUNCTION_WORDS, w) {
            Some(ChunkTag::Other)
        } else if word_in(lexicon::NOUNS, w) {
            Some(ChunkTag::Noun)
        } else if word_in(lexicon::ADJECTIVES, w) {
            Some(ChunkTag::Adj)
        } else if word_in(lexicon::VERBS, w) {
            Some(ChunkTag::Verb)
        } else if word_in(lexicon::ADVERBS, w) {
            Some(ChunkTag::Other)
        } else {
            None
        }
    };

    if let Some(tag) = lookup(word) {
        return tag;
    }
    if let Some(singular) = singularize(word) {
        if let Some(tag) = lookup(&singular) {
            return tag;
        }
    }

    // Suffix heuristics for words outside the lexicon.
    if word.len() > 3 && word.ends_with("ly") {
        return ChunkTag::Other;
    }
    if word.len() > 4 && (word.ends_with("ing") || word.ends_with("ed")) {
        return ChunkTag::Verb;
    }
    for suffix in ["ish", "ous", "ful", "less", "able", "ible", "ive", "est"] {
        if word.len() > suffix.len() + 1 && word.ends_with(suffix) {
            return ChunkTag::Adj;
        }
    }
    // Open-class default: unseen content words are treated as nouns so that
    // novel concepts stay segmentable.
    ChunkTag::Noun
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
                .to_string()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

struct Chunk {
    start: usize,
    end: usize,
    noun_indices: Vec<usize>,
    adj_indices: Vec<usize>,
    /// Tag of the token immediately before the chunk, if any.
    lead: Option<ChunkTag>,
    /// Index of the leading preposition when `lead` is a preposition.
    lead_index: Option<usize>,
}

fn build_entities(tokens: &[Token], tags: &[ChunkTag]) -> (Vec<Entity>, Vec<Token>) {
    let mut chunks: Vec<Chunk> = Vec::new();
    let mut predicates: Vec<Token> = Vec::new();

    let mut i = 0;
    while i < tokens.len() {
        match tags[i] {
            ChunkTag::Det | ChunkTag::Adj | ChunkTag::Noun => {
                // Greedy leftmost-longest run of determiner/adjective/noun.
                // A determiner after a noun opens a new phrase, so the run
                // stops there ("a fence a shiny fish" is two chunks).
                let start = i;
                let mut end = i;
                let mut saw_noun = tags[i] == ChunkTag::Noun;
                while end + 1 < tokens.len() {
                    let next = tags[end + 1];
                    let extends = match next {
                        ChunkTag::Adj | ChunkTag::Noun => true,
                        ChunkTag::Det => !saw_noun,
                        _ => false,
                    };
                    if !extends {
                        break;
                    }
                    end += 1;
                    saw_noun |= next == ChunkTag::Noun;
                }
                let noun_indices: Vec<usize> = (start..=end)
                    .filter(|&k| tags[k] == ChunkTag::Noun)
                    .collect();
                let adj_indices: Vec<usize> = (start..=end)
                    .filter(|&k| tags[k] == ChunkTag::Adj)
                    .collect();
                let lead = if start > 0 {
                    Some(tags[start - 1])
                } else {
                    None
                };
                let lead_index = match lead {
                    Some(ChunkTag::PrepAttribute) | Some(ChunkTag::PrepSpatial) => Some(start - 1),
                    _ => None,
                };
                if !noun_indices.is_empty() {
                    chunks.push(Chunk {
                        start,
                        end,
                        noun_indices,
                        adj_indices,
                        lead,
                        lead_index,
                    });
                }
                i = end + 1;
            }
            ChunkTag::Verb => {
                predicates.push(tokens[i].clone());
                i += 1;
            }
            _ => i += 1,
        }
    }

    let mut entities: Vec<Entity> = Vec::new();
    for chunk in chunks {
        let root_idx = *chunk.noun_indices.last().expect("chunk has a noun");
        // Adjectives modify the nearest following noun within the chunk,
        // falling back to the head for trailing adjectives.
        let links: Vec<AdjectiveLink> = chunk
            .adj_indices
            .iter()
            .map(|&a| {
                let target = chunk
                    .noun_indices
                    .iter()
                    .copied()
                    .find(|&n| n > a)
                    .unwrap_or(root_idx);
                AdjectiveLink {
                    token: tokens[a].clone(),
                    modifies: target,
                }
            })
            .collect();

        let attaches = chunk.lead == Some(ChunkTag::PrepAttribute) && !entities.is_empty();
        if attaches {
            let host = entities.last_mut().expect("attachment host exists");
            for &n in &chunk.noun_indices {
                host.attribute_nouns.push(tokens[n].clone());
            }
            host.adjectives.extend(links);
            host.phrase_span.1 = chunk.end;
        } else {
            let span_start = chunk.lead_index.map_or(chunk.start, |_| chunk.start);
            entities.push(Entity {
                root_token: tokens[root_idx].clone(),
                adjectives: links,
                attribute_nouns: chunk
                    .noun_indices
                    .iter()
                    .filter(|&&n| n != root_idx)
                    .map(|&n| tokens[n].clone())
                    .collect(),
                phrase_span: (span_start, chunk.end),
            });
        }
    }

    (entities, predicates)
}

fn exclusion_sets(count: usize) -> Vec<BTreeSet<usize>> {
    (0..count)
        .map(|i| (0..count).filter(|&j| j != i).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Parse a referring expression into entities, predicates and exclusion sets.
pub fn parse_expression(
    text: &str,
    backend: &ParserBackend,
) -> Result<ParsedExpression, ParseError> {
    let surfaces = tokenize(text);
    if surfaces.is_empty() {
        return Err(ParseError::EmptyExpression);
    }

    let tags: Vec<ChunkTag> = match backend {
        ParserBackend::BuiltinRules => surfaces.iter().map(|w| tag_word(w)).collect(),
        ParserBackend::ExternalTagger(tagger) => {
            let tagged = tagger
                .tag(text)
                .map_err(|reason| ParseError::BackendUnavailable {
                    reason,
                    raw_reply: None,
                })?;
            return parse_pretagged(text, &tagged);
        }
        ParserBackend::LlmPrompted {
            prompt_template,
            transport,
        } => {
            return llm::parse_via_llm(text, prompt_template, transport.as_ref(), &surfaces);
        }
    };

    finish_parse(text, surfaces, tags)
}

fn parse_pretagged(
    text: &str,
    tagged: &[(String, PosTag)],
) -> Result<ParsedExpression, ParseError> {
    if tagged.is_empty() {
        return Err(ParseError::EmptyExpression);
    }
    let surfaces: Vec<String> = tagged.iter().map(|(w, _)| w.clone()).collect();
    // Re-derive chunk detail from the builtin tables; the external tool only
    // pins the coarse class.
    let tags: Vec<ChunkTag> = tagged
        .iter()
        .map(|(w, pos)| match pos {
            PosTag::Noun => ChunkTag::Noun,
            PosTag::Adj => ChunkTag::Adj,
            PosTag::Verb => ChunkTag::Verb,
            PosTag::Other => match tag_word(w) {
                t @ (ChunkTag::Det | ChunkTag::PrepAttribute | ChunkTag::PrepSpatial) => t,
                _ => ChunkTag::Other,
            },
        })
        .collect();
    finish_parse(text, surfaces, tags)
}

fn finish_parse(
    text: &str,
    surfaces: Vec<String>,
    tags: Vec<ChunkTag>,
) -> Result<ParsedExpression, ParseError> {
    let tokens: Vec<Token> = surfaces
        .into_iter()
        .zip(&tags)
        .enumerate()
        .map(|(index, (surface, tag))| Token {
            surface,
            index,
            pos_tag: tag.public(),
        })
        .collect();

    if !tokens.iter().any(|t| t.pos_tag == PosTag::Noun) {
        return Err(ParseError::NoEntityFound(text.to_string()));
    }

    let (entities, predicates) = build_entities(&tokens, &tags);
    if entities.is_empty() {
        return Err(ParseError::NoEntityFound(text.to_string()));
    }
    let exclusion_sets = exclusion_sets(entities.len());

    Ok(ParsedExpression {
        tokens,
        entities,
        predicates,
        exclusion_sets,
    })
}

/// Generate `n` mutated expressions, replacing only the subject noun-phrase
/// root while preserving the sentence frame. The original text is never
/// returned among the variants; if the synonym source cannot supply `n`
/// distinct candidates the call fails rather than truncating.
pub fn mutate_expression(
    text: &str,
    n: usize,
    backend: &ParserBackend,
    table: &SynonymTable,
    rng: &mut dyn RngCore,
) -> Result<Vec<String>, ParseError> {
    if n == 0 {
        return Ok(Vec::new());
    }

    if let ParserBackend::LlmPrompted { transport, .. } = backend {
        return llm::mutate_via_llm(text, n, transport.as_ref());
    }

    let parsed = parse_expression(text, backend)?;
    let subject = &parsed.entities[0];
    let root = &subject.root_token;

    let mut candidates: Vec<&String> = table
        .candidates(&root.surface)
        .iter()
        .filter(|c| !c.eq_ignore_ascii_case(&root.surface))
        .collect();
    if candidates.len() < n {
        return Err(ParseError::InsufficientSynonyms {
            word: root.surface.clone(),
            available: candidates.len(),
            requested: n,
        });
    }
    // Seeded draw without replacement keeps study runs reproducible.
    candidates.shuffle(rng);
    candidates.truncate(n);

    let variants = candidates
        .into_iter()
        .map(|replacement| {
            parsed
                .tokens
                .iter()
                .map(|t| {
                    if t.index == root.index {
                        replacement.as_str()
                    } else {
                        t.surface.as_str()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Ok(variants)
}

/// Draw the study-mode variant count, uniform over 2..=5.
pub fn study_variant_count(rng: &mut dyn RngCore) -> usize {
    use rand::Rng;
    rng.gen_range(2..=5)
}
