//! Seeded synthetic dataset: a textured figure over a static textured
//! background, performing one of four motion patterns.
//!
//! * `arms`: side limbs swing between hanging and raised above the head.
//! * `bend`: the upper body folds down and widens, then straightens.
//! * `fall`: the figure drops from standing to lying on the floor.
//! * `walk`: the figure translates sideways with alternating legs.
//!
//! Actors differ in size, color, stripe texture, position and tempo, so a
//! model trained on one actor has to generalize to another.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use actrec_core::image::{to_grayscale, ColorImage, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::BACKGROUND_DIR;
use crate::pnm;

pub const ACTIVITIES: [&str; 4] = ["arms", "bend", "fall", "walk"];
pub const FRAME_WIDTH: usize = 320;
pub const FRAME_HEIGHT: usize = 240;
const FLOOR_Y: f64 = 205.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    /// Number of activity classes, taken in order from [`ACTIVITIES`].
    pub classes: usize,
    pub actors: usize,
    pub frames_per_clip: usize,
    pub background_frames: usize,
    /// Per-channel sensor noise amplitude.
    pub noise: i32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { seed: 1, classes: 4, actors: 2, frames_per_clip: 40, background_frames: 12, noise: 2 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("classes must be in 1..={max}, got {got}")]
    Classes { got: usize, max: usize },
    #[error("actors must be in 1..=26, got {0}")]
    Actors(usize),
    #[error("frames per clip must be positive")]
    Frames,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Actor names: `A`, `B`, ...
pub fn actor_name(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

#[derive(Debug, Clone, Copy)]
struct Actor {
    scale: f64,
    x: f64,
    color: [f64; 3],
    stripe: f64,
    tempo: f64,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

// Body parts for `activity` at time `t` seconds, feet centered on `cx`.
fn pose(activity: &str, actor: &Actor, t: f64, cx: f64) -> Vec<Rect> {
    let s = actor.scale;
    let leg_h = 46.0 * s;
    let torso_h = 58.0 * s;
    let torso_w = 34.0 * s;
    let head = 16.0 * s;
    let arm_w = 8.0 * s;
    let arm_h = 42.0 * s;
    let hip = FLOOR_Y - leg_h;
    let shoulder = hip - torso_h;
    let standing = |cx: f64| {
        vec![
            Rect { x0: cx - 12.0 * s, y0: hip, x1: cx + 12.0 * s, y1: FLOOR_Y },
            Rect { x0: cx - torso_w / 2.0, y0: shoulder, x1: cx + torso_w / 2.0, y1: hip },
            Rect { x0: cx - head / 2.0, y0: shoulder - head - 2.0, x1: cx + head / 2.0, y1: shoulder - 2.0 },
        ]
    };
    match activity {
        "arms" => {
            // 0 = hanging, 1 = raised
            let lift = 0.5 - 0.5 * (TAU * t / 1.0).cos();
            let top = shoulder - lift * arm_h;
            let mut parts = standing(cx);
            for side in [-1.0, 1.0] {
                let inner = cx + side * (torso_w / 2.0 + 2.0);
                let outer = inner + side * arm_w;
                parts.push(Rect { x0: inner.min(outer), y0: top, x1: inner.max(outer), y1: top + arm_h });
            }
            parts
        }
        "bend" => {
            let fold = 0.5 - 0.5 * (TAU * t / 1.5).cos();
            let th = torso_h * (1.0 - 0.55 * fold);
            let tw = torso_w * (1.0 + 1.4 * fold);
            let top = hip - th;
            let head_x = cx + tw / 2.0 - head * fold;
            vec![
                Rect { x0: cx - 12.0 * s, y0: hip, x1: cx + 12.0 * s, y1: FLOOR_Y },
                Rect { x0: cx - torso_w / 2.0, y0: top, x1: cx - torso_w / 2.0 + tw, y1: hip },
                Rect { x0: head_x - head / 2.0, y0: top - head - 2.0 + fold * head, x1: head_x + head / 2.0, y1: top - 2.0 + fold * head },
            ]
        }
        "fall" => {
            // stand 0.4 s, topple 0.6 s, lie 1.0 s
            let phase = (t % 2.0) / 2.0;
            let drop = ((phase - 0.2) / 0.3).clamp(0.0, 1.0);
            let height = (leg_h + torso_h + head) * (1.0 - drop) + 24.0 * s * drop;
            let width = torso_w * (1.0 - drop) + (leg_h + torso_h + head) * drop;
            let top = FLOOR_Y - height;
            if drop < 0.05 {
                standing(cx)
            } else {
                vec![
                    Rect { x0: cx - width / 2.0, y0: top + height * 0.3, x1: cx + width / 2.0, y1: FLOOR_Y },
                    Rect { x0: cx + width / 2.0 - head, y0: top, x1: cx + width / 2.0, y1: top + height * 0.3 + 1.0 },
                ]
            }
        }
        "walk" => {
            let swing = (TAU * t / 0.8).sin() * 12.0 * s;
            let mut parts = standing(cx);
            parts[0] = Rect { x0: cx + swing - 5.0 * s, y0: hip, x1: cx + swing + 5.0 * s, y1: FLOOR_Y };
            parts.push(Rect { x0: cx - swing - 5.0 * s, y0: hip, x1: cx - swing + 5.0 * s, y1: FLOOR_Y });
            parts
        }
        other => unreachable!("unknown activity {other}"),
    }
}

fn background(rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let blotches: Vec<(Rect, f64)> = (0..14)
        .map(|_| {
            let x0 = rng.random_range(0.0..300.0);
            let y0 = rng.random_range(0.0..220.0);
            let r = Rect { x0, y0, x1: x0 + rng.random_range(15.0..70.0), y1: y0 + rng.random_range(10.0..50.0) };
            (r, rng.random_range(-5.0..5.0))
        })
        .collect();
    let mut px = Vec::with_capacity(FRAME_WIDTH * FRAME_HEIGHT);
    for y in 0..FRAME_HEIGHT {
        for x in 0..FRAME_WIDTH {
            let (xf, yf) = (x as f64, y as f64);
            let mut g = 150.0 + 4.0 * (xf / 17.0).sin() * (yf / 23.0).cos() + 0.03 * (yf - 120.0);
            if yf >= FLOOR_Y {
                g += 4.0;
            }
            g += blotches.iter().filter(|(r, _)| r.contains(xf, yf)).map(|(_, v)| v).sum::<f64>();
            px.push([g * 1.02, g, g * 0.96]);
        }
    }
    px
}

fn quantize(v: f64, noise: i32, rng: &mut ChaCha8Rng) -> u8 {
    let n = if noise > 0 { rng.random_range(-noise..=noise) } else { 0 };
    (v.round() as i32 + n).clamp(0, 255) as u8
}

fn render(bg: &[[f64; 3]], parts: &[Rect], actor: &Actor, noise: i32, rng: &mut ChaCha8Rng) -> ColorImage {
    let origin = parts.iter().fold((f64::MAX, f64::MAX), |(x, y), r| (x.min(r.x0), y.min(r.y0)));
    let mut px = Vec::with_capacity(bg.len());
    for y in 0..FRAME_HEIGHT {
        for x in 0..FRAME_WIDTH {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let base = if parts.iter().any(|r| r.contains(xf, yf)) {
                let u = ((xf - origin.0) + (yf - origin.1)) / actor.stripe;
                let m = if u.floor() as i64 % 2 == 0 { 1.0 } else { 0.7 };
                actor.color.map(|c| c * m)
            } else {
                bg[y * FRAME_WIDTH + x]
            };
            px.push(Rgb(base.map(|c| quantize(c, noise, rng))));
        }
    }
    ColorImage::from_pixels(FRAME_WIDTH, FRAME_HEIGHT, px).expect("frame size")
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SynthError> {
    fs::write(path, bytes).map_err(|source| SynthError::Io { path: path.display().to_string(), source })
}

fn mkdir(path: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(path).map_err(|source| SynthError::Io { path: path.display().to_string(), source })
}

/// Writes the dataset under `root` in the ingest layout.
pub fn generate(root: &Path, opts: &SynthOptions) -> Result<(), SynthError> {
    if opts.classes == 0 || opts.classes > ACTIVITIES.len() {
        return Err(SynthError::Classes { got: opts.classes, max: ACTIVITIES.len() });
    }
    if opts.actors == 0 || opts.actors > 26 {
        return Err(SynthError::Actors(opts.actors));
    }
    if opts.frames_per_clip == 0 {
        return Err(SynthError::Frames);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bg = background(&mut rng);

    let bg_dir = root.join(BACKGROUND_DIR);
    mkdir(&bg_dir)?;
    for i in 0..opts.background_frames.max(1) {
        let frame = render(&bg, &[], &Actor { scale: 1.0, x: 0.0, color: [0.0; 3], stripe: 1.0, tempo: 1.0 }, opts.noise, &mut rng);
        write(&bg_dir.join(format!("bg_{i:04}.pgm")), &pnm::encode_gray(&to_grayscale(&frame)))?;
    }

    let palette = [[40.0, 50.0, 170.0], [150.0, 30.0, 40.0], [30.0, 110.0, 40.0], [90.0, 40.0, 110.0]];
    for a in 0..opts.actors {
        let actor = Actor {
            scale: rng.random_range(0.88..1.08),
            x: rng.random_range(156.0..164.0),
            color: palette[a % palette.len()],
            stripe: rng.random_range(5.0..9.0),
            tempo: rng.random_range(0.9..1.1),
        };
        for activity in &ACTIVITIES[..opts.classes] {
            let dir = root.join(actor_name(a)).join(activity);
            mkdir(&dir)?;
            let phase = rng.random_range(0.0..2.0);
            for f in 0..opts.frames_per_clip {
                let t = phase + f as f64 / 10.0 * actor.tempo;
                let cx = if *activity == "walk" {
                    // pace back and forth between x = 60 and x = 260
                    let span = 200.0;
                    let d = (actor.x - 60.0 + 30.0 * t) % (2.0 * span);
                    60.0 + if d < span { d } else { 2.0 * span - d }
                } else {
                    actor.x
                };
                let frame = render(&bg, &pose(activity, &actor, t, cx), &actor, opts.noise, &mut rng);
                write(&dir.join(format!("frame_{f:04}.ppm")), &pnm::encode_color(&frame))?;
            }
        }
    }
    Ok(())
}
