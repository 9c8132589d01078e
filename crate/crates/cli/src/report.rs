use std::fmt::Display;

/// Named key/value blocks, rendered either for reading or as
/// line-oriented `key: value` text.
#[derive(Default)]
pub struct Report {
    blocks: Vec<Block>,
}

pub struct Block {
    name: String,
    fields: Vec<(String, String)>,
}

impl Block {
    pub fn new(name: &str) -> Self {
        Block { name: name.to_string(), fields: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.fields.push((key.to_string(), value.to_string().replace('\n', " ")));
    }
}

impl Report {
    pub fn add(&mut self, b: Block) {
        self.blocks.push(b);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!("{}\n", b.name));
            let w = b.fields.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
            for (k, v) in &b.fields {
                out.push_str(&format!("  {k:<w$}  {v}\n"));
            }
        }
        out
    }

    pub fn to_structured(&self) -> String {
        let blocks: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let mut s = format!("[{}]\n", b.name);
                for (k, v) in &b.fields {
                    s.push_str(&format!("{k}: {v}\n"));
                }
                s
            })
            .collect();
        blocks.join("\n")
    }
}
