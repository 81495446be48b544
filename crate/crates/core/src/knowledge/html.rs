//! Static pages: a project index and one page per theorem with linked dependencies.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::corpus::Item;
use super::project::Project;
use crate::fof::escape;

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Page file name of a theorem, relative to the site root.
pub fn theorem_page(name: &str) -> String {
    format!("thm/{}.html", escape(name))
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{}</title></head>\n<body>\n{}</body></html>\n",
        escape_html(title),
        body
    )
}

pub fn write_site(p: &Project, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir.join("thm"))?;
    let mut index = format!("<h1>{}</h1>\n<h2>Theorems</h2>\n<ul>\n", escape_html(&p.name));
    let mut defs = String::new();
    for item in &p.corpus.items {
        match item {
            Item::Theorem(t) => {
                let _ = writeln!(index, "<li><a href=\"{}\">{}</a></li>", theorem_page(&t.name), escape_html(&t.name));
                let mut body = format!(
                    "<h1>{}</h1>\n<pre>{}</pre>\n",
                    escape_html(&t.name),
                    escape_html(&p.display(&t.statement))
                );
                let _ = writeln!(body, "<p>Content name: <code>{}</code></p>", p.theorem_content[&t.name]);
                if t.conjuncts.len() > 1 {
                    body.push_str("<h2>Conjuncts</h2>\n<ul>\n");
                    for c in &t.conjuncts {
                        let _ = writeln!(
                            body,
                            "<li>{}: <code>{}</code></li>",
                            escape_html(&c.label),
                            escape_html(&p.display(&c.statement))
                        );
                    }
                    body.push_str("</ul>\n");
                }
                body.push_str("<h2>Dependencies</h2>\n<ul>\n");
                for d in &t.deps {
                    let _ = writeln!(body, "<li><a href=\"../{}\">{}</a></li>", theorem_page(d), escape_html(d));
                }
                body.push_str("</ul>\n<p><a href=\"../index.html\">index</a></p>\n");
                fs::write(dir.join(theorem_page(&t.name)), page(&t.name, &body))?;
            }
            Item::Definition(d) => {
                let _ = writeln!(
                    defs,
                    "<li><code>{} = {}</code></li>",
                    escape_html(&d.symbol),
                    escape_html(&p.display(&d.body))
                );
            }
            Item::Primitive(_) => {}
        }
    }
    index.push_str("</ul>\n");
    if !defs.is_empty() {
        index.push_str("<h2>Definitions</h2>\n<ul>\n");
        index.push_str(&defs);
        index.push_str("</ul>\n");
    }
    fs::write(dir.join("index.html"), page(&p.name, &index))
}
