//! Encode a warning into SIB8 segments and print every SI body as a hex dump,
//! then decode it back.
//!
//! ```text
//! cargo run -p alertbed --example encode_warning -- "Tsunami warning. Move inland."
//! ```

use alertbed::codec::{
    content_hash, decode_text, hex_dump, paginate, reassemble, segment, SiMessage, WarningPayload, MAX_SI_OCTETS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "Emergency Alert: a tsunami warning is in effect for the coastal zone. \
         Leave low-lying areas now. Details: https://tinyurl.com/x9k"
            .repeat(3)
    });
    // GSM7 when every character fits, otherwise UCS2.
    let payload = WarningPayload::auto(4370, 1, text);
    let encoded = paginate(&payload)?;
    println!(
        "coding {:?}, dcs 0x{:02x}, {} page(s), digest {}",
        payload.coding,
        encoded.dcs,
        encoded.pages.len(),
        content_hash(&encoded)
    );

    let segments = segment(&encoded, MAX_SI_OCTETS)?;
    for (index, seg) in segments.iter().enumerate() {
        let si = SiMessage::new(index as u8, seg)?;
        println!(
            "\nSI {index}: segment {} of warning ({}, {}), last={}, {} octets",
            seg.segment_number,
            seg.message_identifier,
            seg.serial_number,
            seg.is_last,
            si.body.len()
        );
        println!("{}", hex_dump(&si.body));
    }

    let decoded = decode_text(&reassemble(&segments)?)?;
    assert_eq!(decoded, payload.text);
    println!("\nround trip ok: {decoded:?}");
    Ok(())
}
