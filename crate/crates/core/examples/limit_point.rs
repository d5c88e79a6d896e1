//! Where nested random triangles shrink to. Barycentric weights of the
//! limit point are exchangeable with mean 1/3.

use polysub::dynamics::estimate_limit_point;
use polysub::parallel::map_replicas;
use polysub::shapedist::INITIAL_TRIANGLE;
use polysub::stats::MeanSe;
use polysub::SplitSpec;

fn main() -> polysub::Result<()> {
    let spec = SplitSpec::uniform();
    let points = map_replicas(11, 2000, |_, mut rng| estimate_limit_point(&INITIAL_TRIANGLE, &spec, 200, &mut rng))?;
    for j in 0..3 {
        let w: Vec<f64> = points.iter().map(|p| p.weights[j]).collect();
        let m = MeanSe::from_samples(&w);
        let var = w.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        println!("w_{} mean {:.4} ± {:.4}  variance {:.4}", j + 1, m.mean, m.se, var);
    }
    println!("first point ({:.4}, {:.4})", points[0].point[0], points[0].point[1]);
    Ok(())
}
