/// Rotates a row-major `side x side` image about its center by `angle`
/// radians (positive is counter-clockwise as displayed) with bilinear
/// interpolation. Source reads outside the image are 0 and the output is
/// clamped to `[0, 1]`.
pub fn rotate_image(img: &[f64], side: usize, angle: f64) -> Vec<f64> {
    assert_eq!(img.len(), side * side, "rotate_image: image is not side x side");
    let c = (side as f64 - 1.0) / 2.0;
    let (sin, cos) = angle.sin_cos();
    let at = |r: isize, col: isize| -> f64 {
        if r < 0 || col < 0 || r >= side as isize || col >= side as isize {
            0.0
        } else {
            img[r as usize * side + col as usize]
        }
    };
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        for col in 0..side {
            // Output pixel in centered coordinates with y pointing up.
            let x = col as f64 - c;
            let y = c - r as f64;
            let sc = snap(x * cos + y * sin + c);
            let sr = snap(c - (-x * sin + y * cos));
            let (r0, c0) = (sr.floor(), sc.floor());
            let (fr, fc) = (sr - r0, sc - c0);
            let (r0, c0) = (r0 as isize, c0 as isize);
            let v = (1.0 - fr) * ((1.0 - fc) * at(r0, c0) + fc * at(r0, c0 + 1))
                + fr * ((1.0 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
            out[r * side + col] = v.clamp(0.0, 1.0);
        }
    }
    out
}

/// Rounds coordinates within 1e-9 of an integer so axis-aligned rotations
/// permute pixels exactly.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}
