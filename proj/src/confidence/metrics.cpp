#include "biouncert/confidence.hpp"

#include <cmath>
#include <limits>

#include "biouncert/error.hpp"

namespace biouncert::metrics {

IouResult stack_iou(const SampleStack& stack)
{
    const Label o = stack.organ_label();
    const auto& samples = stack.samples();
    const std::size_t n_vox = samples.front().size();
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t v = 0; v < n_vox; ++v) {
        bool all = true;
        bool any = false;
        for (const auto& s : samples) {
            const bool fg = s[v] == o;
            all = all && fg;
            any = any || fg;
        }
        inter += all ? 1 : 0;
        uni += any ? 1 : 0;
    }
    if (uni == 0)
        return IouResult{0.0, true};
    return IouResult{static_cast<double>(inter) / static_cast<double>(uni), false};
}

double pair_iou(const LabelVolume& a, const LabelVolume& b, Label o)
{
    if (a.dims() != b.dims())
        throw Error(Errc::DimsMismatch, "pair_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        const bool fa = a[v] == o, fb = b[v] == o;
        inter += (fa && fb) ? 1 : 0;
        uni += (fa || fb) ? 1 : 0;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double volume_of(const LabelVolume& vol, Label organ_label)
{
    return static_cast<double>(vol.count(organ_label)) * vol.spacing().voxel_volume_mm3();
}

CvResult coefficient_of_variation(std::span<const double> volumes)
{
    if (volumes.empty())
        throw Error(Errc::UndefinedCv, "no volumes");
    const double n = static_cast<double>(volumes.size());
    double sum = 0.0;
    for (double v : volumes)
        sum += v;
    const double mu = sum / n;
    if (!(mu > 0.0))
        throw Error(Errc::UndefinedCv, "mean volume is zero (no sample contains the organ)");
    double ss = 0.0;
    for (double v : volumes)
        ss += (v - mu) * (v - mu);
    CvResult r;
    r.mean_volume = mu;
    r.cv = std::sqrt(ss / (n * mu * mu));
    if (r.cv > 0.0) {
        r.inv_cv = 1.0 / r.cv;
    } else {
        r.inv_cv = std::numeric_limits<double>::infinity();
        r.inv_cv_infinite = true;
    }
    return r;
}

CvResult stack_cv(const SampleStack& stack)
{
    std::vector<double> volumes;
    volumes.reserve(stack.size());
    for (const auto& s : stack.samples())
        volumes.push_back(volume_of(s, stack.organ_label()));
    return coefficient_of_variation(volumes);
}

double dice(const LabelVolume& pred, const LabelVolume& truth, Label o)
{
    if (pred.dims() != truth.dims())
        throw Error(Errc::DimsMismatch, "dice: prediction and truth grids differ");
    std::size_t inter = 0, np = 0, nt = 0;
    for (std::size_t v = 0; v < pred.size(); ++v) {
        const bool fp = pred[v] == o, ft = truth[v] == o;
        np += fp ? 1 : 0;
        nt += ft ? 1 : 0;
        inter += (fp && ft) ? 1 : 0;
    }
    if (np + nt == 0)
        return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(np + nt);
}

double binary_entropy_bits(double p)
{
    if (p <= 0.0 || p >= 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

std::vector<int> foreground_counts(const SampleStack& stack)
{
    const Label o = stack.organ_label();
    std::vector<int> counts(stack.samples().front().size(), 0);
    for (const auto& s : stack.samples()) {
        for (std::size_t v = 0; v < counts.size(); ++v)
            counts[v] += s[v] == o ? 1 : 0;
    }
    return counts;
}

} // namespace

UncertaintyMap uncertainty_map(const SampleStack& stack)
{
    const auto counts = foreground_counts(stack);
    const double n = static_cast<double>(stack.size());
    UncertaintyMap map{stack.dims(), stack.spacing(), std::vector<double>(counts.size())};
    for (std::size_t v = 0; v < counts.size(); ++v)
        map.values[v] = binary_entropy_bits(counts[v] / n);
    return map;
}

LabelVolume consensus_mask(const SampleStack& stack)
{
    const auto counts = foreground_counts(stack);
    const int n = static_cast<int>(stack.size());
    std::vector<Label> labels(counts.size(), kBackground);
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (2 * counts[v] >= n)
            labels[v] = stack.organ_label();
    }
    return LabelVolume(stack.dims(), stack.spacing(), std::move(labels));
}

ConfidenceReport confidence_report(const SampleStack& stack)
{
    ConfidenceReport r;
    r.subject_id = stack.subject_id();
    const auto iou = stack_iou(stack);
    r.iou = iou.value;
    r.iou_degenerate = iou.degenerate;
    for (const auto& s : stack.samples())
        r.volumes_mm3.push_back(volume_of(s, stack.organ_label()));
    const auto cv = coefficient_of_variation(r.volumes_mm3);
    r.cv = cv.cv;
    r.inv_cv = cv.inv_cv;
    r.inv_cv_infinite = cv.inv_cv_infinite;
    r.mean_volume_mm3 = cv.mean_volume;
    r.consensus_volume_mm3 = volume_of(consensus_mask(stack), stack.organ_label());
    return r;
}

} // namespace biouncert::metrics
