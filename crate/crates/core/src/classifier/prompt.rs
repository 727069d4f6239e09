//! Prompt templates and slot filling.
//!
//! Slots are written as `{title of paper}`, `{paper abstract}`,
//! `{title of reference}` and `{reference abstract}` and are filled in a
//! single left-to-right pass, so slot-like text inside a filled value is
//! never expanded again.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO_SHOT_TEMPLATE: &str = r#"Given two papers - Paper A {title of paper} with abstract {paper abstract}, and its primary reference Paper B {title of reference} with abstract {reference abstract} - Paper A is better considered as an innovation in 'theory' (such as a different conceptual difference from its reference paper above), (2): an innovation in 'method' (such as an improvement on or formalization of the latter in mathematical frameworks)? Only give the option number."#;

pub const CONCRETE_WORDING_TEMPLATE: &str = r#"For the following two papers: Paper A {title of paper}, whose abstract is {paper abstract}, and its top reference Paper B {title of reference}, whose abstract is {reference abstract}, Paper A is better considered as (1): an innovation in 'conceptual difference' (a different conceptual angle from its reference paper above), (2): an innovation in 'formalism difference' (an improvement on or formalization of the latter, such as in methodological or in mathematical frameworks)? Only give the option number."#;

/// Zero-shot wording with a third "others" option.
pub const THREE_OPTION_TEMPLATE: &str = r#"Given two papers - Paper A {title of paper} with abstract {paper abstract}, and its primary reference Paper B {title of reference} with abstract {reference abstract} - Paper A is better considered as an innovation in 'theory' (such as a different conceptual difference from its reference paper above), (2): an innovation in 'method' (such as an improvement on or formalization of the latter in mathematical frameworks), (3) others? Only give the option number."#;

/// Worked examples placed ahead of the zero-shot prompt in few-shot mode.
pub const FEW_SHOT_EXEMPLARS: &str = r#"Example of "method innovation": [[Paper B, "The small world problem" by Milgram (1967), is a seminal work that introduced the concept of the "small world problem," which suggests that any two people in the world are connected through a short chain of acquaintances. The paper presented empirical evidence for this phenomenon through a series of experiments. Paper A, "Collective dynamics of 'small-world' networks" by Watts and Strogatz (1998), builds upon Milgram's work by providing a mathematical framework to understand the small-world phenomenon. Watts and Strogatz introduced a new type of network model, known as the "small-world network," which exhibits both local clustering and long-range connections. They also developed a set of mathematical tools to analyze the properties of these networks. The key innovation in Paper A is methodological refinement of the small-world concept using graph theory and network analysis. Watts and Strogatz provided a rigorous mathematical framework to study the small-world phenomenon, which was previously described only empirically by Milgram. This formalization enabled the development of new models and simulations to understand the behavior of complex networks. Therefore, Paper A is an innovation in 'method']; Example of "theory innovation": [[Paper B, "A note on the Entscheidungsproblem" by Church focuses on the Entscheidungsproblem (decision problem) and uses a lambda calculus-based approach to show that there is no general method for determining the validity of a mathematical statement. In contrast, Paper A "On computable numbers, with an application to the Entscheidungs problem" by Turing introduces the concept of a machine that can perform computations. The key innovation in Paper A is a new theory of computability, which is a quite different conceptual approach from Church's approach of understanding the Entscheidungsproblem. Therefore, Paper A is an innovation in 'theory']]"#;

const FEW_SHOT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    ZeroShot,
    FewShot,
    ConcreteWording,
    ThreeOption,
}

impl PromptMode {
    pub const ALL: [PromptMode; 4] = [
        PromptMode::ZeroShot,
        PromptMode::FewShot,
        PromptMode::ConcreteWording,
        PromptMode::ThreeOption,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero_shot",
            PromptMode::FewShot => "few_shot",
            PromptMode::ConcreteWording => "concrete_wording",
            PromptMode::ThreeOption => "three_option",
        }
    }

    /// Option tokens the model may answer with, option 1 first.
    pub fn options(self) -> &'static [&'static str] {
        match self {
            PromptMode::ThreeOption => &["1", "2", "3"],
            _ => &["1", "2"],
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown prompt mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRequest {
    pub focal_title: String,
    pub focal_abstract: String,
    pub ref_title: String,
    pub ref_abstract: String,
    #[serde(default)]
    pub prompt_mode: PromptMode,
}

impl ClassificationRequest {
    pub fn new(
        focal_title: impl Into<String>,
        focal_abstract: impl Into<String>,
        ref_title: impl Into<String>,
        ref_abstract: impl Into<String>,
        prompt_mode: PromptMode,
    ) -> Self {
        ClassificationRequest {
            focal_title: focal_title.into(),
            focal_abstract: focal_abstract.into(),
            ref_title: ref_title.into(),
            ref_abstract: ref_abstract.into(),
            prompt_mode,
        }
    }

    fn slots(&self) -> [(&'static str, &str); 4] {
        [
            ("title of paper", &self.focal_title),
            ("paper abstract", &self.focal_abstract),
            ("title of reference", &self.ref_title),
            ("reference abstract", &self.ref_abstract),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.slots() {
            if value.trim().is_empty() {
                return Err(Error::EmptyPromptSlot(name));
            }
        }
        Ok(())
    }
}

fn fill(template: &str, slots: &[(&'static str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + slots.iter().map(|s| s.1.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        match tail.find('}').and_then(|close| {
            let name = &tail[..close];
            slots.iter().find(|s| s.0 == name).map(|s| (close, s.1))
        }) {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders the prompt for `req` in its own mode.
pub fn build_prompt(req: &ClassificationRequest) -> Result<String> {
    req.validate()?;
    let slots = req.slots();
    Ok(match req.prompt_mode {
        PromptMode::ZeroShot => fill(ZERO_SHOT_TEMPLATE, &slots),
        PromptMode::FewShot => {
            let mut s = String::from(FEW_SHOT_EXEMPLARS);
            s.push_str(FEW_SHOT_SEPARATOR);
            s.push_str(&fill(ZERO_SHOT_TEMPLATE, &slots));
            s
        }
        PromptMode::ConcreteWording => fill(CONCRETE_WORDING_TEMPLATE, &slots),
        PromptMode::ThreeOption => fill(THREE_OPTION_TEMPLATE, &slots),
    })
}
