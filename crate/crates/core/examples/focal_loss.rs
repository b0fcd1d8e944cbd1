//! Focal loss, the weighted variant, its gradient and a finite-difference check.

use actionvos::loss::{action_guided_focal_loss_with_grad, gradcheck};
use actionvos::{action_guided_focal_loss, focal_loss, BinaryMask, LossConfig, ProbRaster, WeightRaster};

pub fn run() -> actionvos::Result<()> {
    let cfg = LossConfig::default();
    let p = ProbRaster::from_values(1, 1, vec![0.5])?;
    let y = BinaryMask::full(1, 1);
    let w5 = WeightRaster::from_values(1, 1, vec![5.0])?;
    println!("FL(p=0.5, y=1)          = {:.7}", focal_loss(&p, &y, &cfg)?.value);
    println!("FL_act(p=0.5, y=1, W=5) = {:.7}", action_guided_focal_loss(&p, &y, &w5, &cfg)?.value);

    let p = ProbRaster::from_values(2, 2, vec![0.9, 0.2, 0.6, 0.05])?;
    let y = BinaryMask::from_bits(2, 2, vec![true, false, true, false])?;
    let w = WeightRaster::from_values(2, 2, vec![5.0, 2.0, 1.0, 5.0])?;
    let r = action_guided_focal_loss_with_grad(&p, &y, &w, &cfg)?;
    println!("2x2 loss {:.6}, gradient {:?}", r.value, r.gradient.unwrap_or_default());

    let report = gradcheck(100, 7, 1e-6, &cfg)?;
    println!(
        "gradcheck: {} pixels, max rel error {:.3e}, passed {}",
        report.pixels_checked, report.max_rel_error, report.passed
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
