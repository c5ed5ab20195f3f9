//! Show which parts of a warning a handset would make clickable, for a
//! profile that accepts Cyrillic look-alike URLs and one that rejects them.
//!
//! ```text
//! cargo run -p alertbed --example parse_content -- "Update at gov.sa-alerts.соm or call 0112345678"
//! ```

use alertbed::content::{parse_content, ParserProfileFlags, TldList};

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "Evacuate now. Map: 1600 Pennsylvania Ave, Washington, DC 20500. Info https://tinyurl.com/x9k \
         or gov.sa-alerts.соm, mail help@gov.sa, call +1 555-123-4567. <script>alert(1)</script>"
            .into()
    });
    let tlds = TldList::bundled();
    println!("{text}\n");
    for clickable in [true, false] {
        let flags = ParserProfileFlags {
            cyrillic_url_clickable: clickable,
        };
        println!("cyrillic_url_clickable = {clickable}");
        for span in parse_content(&text, flags, &tlds) {
            println!(
                "  {:<10} [{:>3}, {:>3})  {:?}{}",
                format!("{:?}", span.kind),
                span.start,
                span.end,
                span.slice(&text),
                if span.contains_cyrillic { "  (homoglyph)" } else { "" }
            );
        }
    }
}
