//! Write an intensity volume and a label volume as NRRD, read them back.

use ooclab::volume::{read_volume, write_volume, Geometry, LabelVolume, Volume, VoxelVolume};

fn main() -> ooclab::Result<()> {
    let geometry = Geometry::new([4, 3, 2], [1.0, 0.5, 2.5])?;
    let ramp: Vec<f32> = (0..geometry.len()).map(|i| i as f32 / 10.0).collect();
    let image = Volume::Intensity(VoxelVolume::new(geometry, ramp)?);

    let bytes = write_volume(&image);
    let header_len = bytes.windows(2).position(|w| w == b"\n\n").unwrap() + 2;
    println!(
        "{}",
        String::from_utf8_lossy(&bytes[..header_len]).trim_end()
    );
    println!("payload: {} bytes", bytes.len() - header_len);
    assert_eq!(read_volume(&bytes)?, image);

    let mut labels = LabelVolume::filled(geometry, 0);
    labels.labels_mut()[5] = 3;
    let labels = Volume::Labels(labels);
    let back = read_volume(&write_volume(&labels))?.into_labels()?;
    println!(
        "label volume round trip: {} voxel(s) with code 3",
        back.count(3)
    );
    Ok(())
}
