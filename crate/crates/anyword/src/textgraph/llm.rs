//! Prompted-LLM parsing backend: prompt templates, the strict reply grammar
//! `[(attribute1, attribute2, ...), object1]`, and synonym generation with
//! `&`-separated replies.

use super::{AdjectiveLink, Entity, ParseError, ParsedExpression, PosTag, Token};
use std::collections::BTreeSet;

/// Prompt sent to the language model for subject/attribute identification.
/// The wording is fixed; `{caption}` is replaced with the input expression.
pub const PARSING_PROMPT_TEMPLATE: &str = "As a NLP expert, you will be provided a caption \
describing an image. Please do pos tag the caption and identify the only one referred subject \
object and all adjective attributes. Your response should be in the format of \
\"[(attribute1, attribute2, attribute3, ...), object1]\"\n\nConditions:\n\n(1) If the attribute \
is long, short it by picking one original word.\n\n(2) Please include one original word \
possessive source into the attributes for the subject.\n\nCaption: {caption}";

/// Prompt used for synonym generation in the stability study. `{n}` and
/// `{sentence}` are substituted; replies are split on '&'.
pub const SYNONYM_PROMPT_TEMPLATE: &str = "As a NLP expert, please genrate a list of {n} \
synonyms of the noun phrases in the following {sentence} and output the list separated by '&'";

/// Transport handle for a prompted language model. Implementations serialize
/// access internally; one completion per call.
pub trait LlmTransport: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, String>;
}

/// Parsed form of a `[(attr, ...), object]` reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectReply {
    pub attributes: Vec<String>,
    pub object: String,
}

/// Strict grammar for the model reply:
///
/// ```text
/// reply  := '[' '(' attrs? ')' ',' word ']'
/// attrs  := word (',' word)*
/// word   := [^,()\[\]]+   (trimmed)
/// ```
///
/// Anything else is rejected so transport noise never turns into a bogus
/// parse.
pub fn parse_subject_reply(reply: &str) -> Result<SubjectReply, String> {
    let s = reply.trim();
    let s = s
        .strip_prefix('[')
        .ok_or("missing opening '['")?
        .strip_suffix(']')
        .ok_or("missing closing ']'")?
        .trim();
    let s = s.strip_prefix('(').ok_or("missing '(' for attributes")?;
    let close = s.find(')').ok_or("missing ')' after attributes")?;
    let (attr_part, rest) = s.split_at(close);
    let rest = rest[1..].trim();
    let rest = rest.strip_prefix(',').ok_or("missing ',' before object")?;

    let object = rest
        .trim()
        .trim_matches(|c| c == '"' || c == '\'')
        .to_string();
    if object.is_empty() || object.contains(|c: char| "[]()".contains(c)) {
        return Err(format!("malformed object {object:?}"));
    }

    let attributes: Vec<String> = attr_part
        .split(',')
        .map(|a| a.trim().trim_matches(|c| c == '"' || c == '\'').to_string())
        .filter(|a| !a.is_empty() && *a != "...")
        .collect();
    for attr in &attributes {
        if attr.contains(|c: char| "[]()".contains(c)) {
            return Err(format!("malformed attribute {attr:?}"));
        }
    }

    Ok(SubjectReply { attributes, object })
}

fn find_token(surfaces: &[String], word: &str) -> Option<usize> {
    let lower = word.to_lowercase();
    surfaces
        .iter()
        .position(|s| s.to_lowercase() == lower)
        .or_else(|| {
            surfaces
                .iter()
                .position(|s| s.to_lowercase().starts_with(&lower))
        })
}

/// Parse via the prompted model: one subject entity with its attributes.
/// Attributes cover adjectives and possessive sources alike; both are stored
/// as adjective links on the subject.
pub fn parse_via_llm(
    text: &str,
    template: &str,
    transport: &dyn LlmTransport,
    surfaces: &[String],
) -> Result<ParsedExpression, ParseError> {
    let prompt = template.replace("{caption}", text);
    let raw = transport
        .complete(&prompt)
        .map_err(|reason| ParseError::BackendUnavailable {
            reason,
            raw_reply: None,
        })?;
    let reply = parse_subject_reply(&raw).map_err(|reason| ParseError::BackendUnavailable {
        reason,
        raw_reply: Some(raw.clone()),
    })?;

    let root_pos =
        find_token(surfaces, &reply.object).ok_or_else(|| ParseError::BackendUnavailable {
            reason: format!("object {:?} not present in expression", reply.object),
            raw_reply: Some(raw.clone()),
        })?;

    let mut tokens: Vec<Token> = surfaces
        .iter()
        .enumerate()
        .map(|(index, surface)| Token {
            surface: surface.clone(),
            index,
            pos_tag: PosTag::Other,
        })
        .collect();
    tokens[root_pos].pos_tag = PosTag::Noun;

    let mut links: Vec<AdjectiveLink> = Vec::new();
    let mut span = (root_pos, root_pos);
    for attr in &reply.attributes {
        // Attributes the model invents (not in the caption) are dropped.
        if let Some(pos) = find_token(surfaces, attr) {
            if pos == root_pos {
                continue;
            }
            tokens[pos].pos_tag = PosTag::Adj;
            links.push(AdjectiveLink {
                token: tokens[pos].clone(),
                modifies: root_pos,
            });
            span.0 = span.0.min(pos);
            span.1 = span.1.max(pos);
        }
    }

    let entity = Entity {
        root_token: tokens[root_pos].clone(),
        adjectives: links,
        attribute_nouns: Vec::new(),
        phrase_span: span,
    };

    Ok(ParsedExpression {
        tokens,
        entities: vec![entity],
        predicates: Vec::new(),
        exclusion_sets: vec![BTreeSet::new()],
    })
}

/// Synonym generation via the prompted model. The reply is split on '&';
/// fewer than `n` usable variants is an error, never a short list.
pub fn mutate_via_llm(
    text: &str,
    n: usize,
    transport: &dyn LlmTransport,
) -> Result<Vec<String>, ParseError> {
    let prompt = SYNONYM_PROMPT_TEMPLATE
        .replace("{n}", &n.to_string())
        .replace("{sentence}", text);
    let raw = transport
        .complete(&prompt)
        .map_err(|reason| ParseError::BackendUnavailable {
            reason,
            raw_reply: None,
        })?;

    let variants: Vec<String> = raw
        .split('&')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty() && !v.eq_ignore_ascii_case(text.trim()))
        .collect();
    if variants.len() < n {
        return Err(ParseError::BackendUnavailable {
            reason: format!(
                "model returned {} variants, {} requested",
                variants.len(),
                n
            ),
            raw_reply: Some(raw),
        });
    }
    Ok(variants.into_iter().take(n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textgraph::{parse_expression, ParserBackend};
    use std::sync::Arc;

    struct Scripted(&'static str);

    impl LlmTransport for Scripted {
        fn complete(&self, _prompt: &str) -> Result<String, String> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn reply_grammar_accepts_expected_shape() {
        let r = parse_subject_reply("[(blue, tall), boy]").unwrap();
        assert_eq!(r.attributes, vec!["blue", "tall"]);
        assert_eq!(r.object, "boy");
    }

    #[test]
    fn reply_grammar_accepts_empty_attributes() {
        let r = parse_subject_reply("[(), cat]").unwrap();
        assert!(r.attributes.is_empty());
        assert_eq!(r.object, "cat");
    }

    #[test]
    fn reply_grammar_rejects_noise() {
        for bad in ["boy", "[(blue) boy]", "[(blue, tall)]", "[blue, boy]", ""] {
            assert!(parse_subject_reply(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn malformed_reply_keeps_raw_text() {
        let backend = ParserBackend::llm(Arc::new(Scripted("sure! the boy")));
        let err = parse_expression("the blue boy", &backend).unwrap_err();
        match err {
            ParseError::BackendUnavailable { raw_reply, .. } => {
                assert_eq!(raw_reply.as_deref(), Some("sure! the boy"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn llm_parse_builds_single_subject() {
        let backend = ParserBackend::llm(Arc::new(Scripted("[(blue), boy]")));
        let p = parse_expression("the blue boy", &backend).unwrap();
        assert_eq!(p.entities.len(), 1);
        assert_eq!(p.entities[0].root_token.surface, "boy");
        assert_eq!(p.entities[0].adjectives[0].token.surface, "blue");
    }

    #[test]
    fn llm_mutation_splits_on_ampersand() {
        let backend = Arc::new(Scripted("apple slices & cut up apples"));
        let out = mutate_via_llm("apple pieces", 2, backend.as_ref()).unwrap();
        assert_eq!(out, vec!["apple slices", "cut up apples"]);
    }

    #[test]
    fn llm_mutation_short_reply_errors() {
        let backend = Arc::new(Scripted("apple slices"));
        assert!(mutate_via_llm("apple pieces", 2, backend.as_ref()).is_err());
    }
}
