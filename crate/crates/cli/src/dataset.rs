//! Dataset directory layout shared by `synth`, `train` and `spot`:
//!
//! ```text
//! root/videos.csv              video_id,subject_id,fps
//! root/annotations.csv         standard annotation CSV
//! root/frames/<video_id>/      000000.png, 000001.png, ...
//! root/landmarks/<video_id>.csv
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use mespot::io::{self, MEAnnotation};
use mespot::synth::SynthVideo;

pub struct DatasetVideo {
    pub video_id: String,
    pub subject_id: String,
    pub fps: f64,
    pub frames_dir: PathBuf,
    pub landmarks: PathBuf,
    pub annotations: Vec<MEAnnotation>,
}

pub fn write(root: &Path, videos: &[SynthVideo]) -> anyhow::Result<()> {
    fs::create_dir_all(root.join("landmarks")).with_context(|| format!("creating {}", root.display()))?;
    let mut index = fs::File::create(root.join("videos.csv"))?;
    writeln!(index, "video_id,subject_id,fps")?;
    let mut anns = Vec::new();
    for v in videos {
        let s = &v.sequence;
        writeln!(index, "{},{},{}", s.video_id, s.subject_id, s.fps)?;
        io::save_frame_sequence(&root.join("frames").join(&s.video_id), s)?;
        io::write_landmarks(&root.join("landmarks").join(format!("{}.csv", s.video_id)), &v.landmarks)?;
        anns.extend(v.annotations.iter().cloned());
    }
    io::write_annotations(&root.join("annotations.csv"), &anns)?;
    Ok(())
}

pub fn read(root: &Path) -> anyhow::Result<Vec<DatasetVideo>> {
    let index = root.join("videos.csv");
    let text = fs::read_to_string(&index).with_context(|| format!("reading {}", index.display()))?;
    let anns = io::parse_annotations(&root.join("annotations.csv"))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(mespot::Error::Parse {
                file: index.display().to_string(),
                row: n,
                message: format!("expected 3 columns, found {}", cols.len()),
            }
            .into());
        }
        let fps: f64 = cols[2].parse().map_err(|_| mespot::Error::Parse {
            file: index.display().to_string(),
            row: n,
            message: format!("bad fps {:?}", cols[2]),
        })?;
        out.push(DatasetVideo {
            video_id: cols[0].to_string(),
            subject_id: cols[1].to_string(),
            fps,
            frames_dir: root.join("frames").join(cols[0]),
            landmarks: root.join("landmarks").join(format!("{}.csv", cols[0])),
            annotations: anns.iter().filter(|a| a.video_id == cols[0]).cloned().collect(),
        });
    }
    Ok(out)
}
