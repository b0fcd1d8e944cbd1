//! Binary-mask basics: IoU, coverage, boxes, components and RLE.

use actionvos::mask::{bbox_of, connected_components, coverage_ratio, iou, RleMask};
use actionvos::BinaryMask;

pub fn run() -> actionvos::Result<()> {
    let a = BinaryMask::from_fn(8, 8, |r, c| r < 4 && c < 4);
    let b = BinaryMask::from_fn(8, 8, |r, c| r < 4 && (2..6).contains(&c));
    println!("iou(a, b)       = {:.4}", iou(&a, &b)?);
    println!("coverage(a | b) = {:.4}", coverage_ratio(&a, &b)?);

    // two hands
    let hands = BinaryMask::from_fn(8, 8, |r, c| (r < 2 && c < 2) || (r >= 6 && c >= 5));
    for (i, comp) in connected_components(&hands).iter().enumerate() {
        println!("component {i}: area {} box {:?}", comp.area(), bbox_of(comp));
    }

    let rle = RleMask::encode(&hands);
    println!("rle counts      = {:?}", rle.counts);
    assert_eq!(rle.decode()?, hands);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
