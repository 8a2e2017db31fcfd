#include "aparecium/inference/watermarker.hpp"

#include "aparecium/core/errors.hpp"
#include "aparecium/core/metrics.hpp"
#include "aparecium/models/checkpoint.hpp"

namespace aparecium::infer {

Watermarker::Watermarker(models::ModelSet models) : models_(std::move(models)) { models_.eval(); }

Watermarker Watermarker::from_checkpoint(const std::filesystem::path& dir) {
  return Watermarker(models::load_checkpoint(dir).models);
}

Pattern Watermarker::pattern_of(const Message& msg) const {
  if (msg.size() != message_bits())
    throw InputError("message has " + std::to_string(msg.size()) + " bits, model expects " +
                     std::to_string(message_bits()));
  torch::NoGradGuard guard;
  return Pattern(models_.processor.forward(msg.to_tensor().unsqueeze(0))[0]);
}

torch::Tensor Watermarker::embed_batch(const torch::Tensor& covers, const torch::Tensor& messages) const {
  const int s = models_.config.image_size;
  if (covers.dim() != 4 || covers.size(1) != 3 || covers.size(2) != s || covers.size(3) != s)
    throw InputError("embed_batch expects B×3×" + std::to_string(s) + "×" + std::to_string(s) + " covers");
  if (messages.dim() != 2 || messages.size(0) != covers.size(0) || messages.size(1) != message_bits())
    throw InputError("embed_batch expects one message of " + std::to_string(message_bits()) + " bits per cover");
  torch::NoGradGuard guard;
  auto pattern = resize_bilinear(models_.processor.forward(messages), s, s);
  return models_.encoder.forward(torch::cat({covers, pattern}, 1)).clamp(0.0, 1.0);
}

EmbedResult Watermarker::embed(const ImageTensor& cover_in, const Message& msg) const {
  EmbedResult r;
  ImageTensor cover = cover_in;
  if (cover.channels() == 1) {
    r.warnings.push_back("grayscale cover replicated to 3 channels");
    cover = cover.to_rgb();
  }
  const int s = models_.config.image_size;
  const auto& c = cover.tensor();
  const bool native = cover.height() == s && cover.width() == s;
  auto small = native ? c : resize_bilinear(c, s, s);
  auto enc = embed_batch(small.unsqueeze(0), msg.to_tensor().unsqueeze(0))[0];
  torch::Tensor encoded;
  if (native) {
    encoded = enc;
  } else {
    auto residual = resize_bilinear(enc - small, cover.height(), cover.width());
    encoded = (c + residual).clamp(0.0, 1.0);
  }
  r.encoded = ImageTensor(encoded);
  r.residual = ImageTensor((0.5 + 5.0 * (r.encoded.tensor() - c)).clamp(0.0, 1.0));
  r.psnr = psnr(cover, r.encoded);
  r.ssim = ssim(cover, r.encoded);
  return r;
}

ExtractResult Watermarker::run_locator(const ImageTensor& photo_in) const {
  const auto photo = photo_in.to_rgb();
  const int l = models_.config.locator_size;
  torch::NoGradGuard guard;
  auto mask = models_.locator.forward(resize_bilinear(photo.batched(), l, l))[0];
  ExtractResult r;
  r.mask = LocMask(mask);
  r.foreground = r.mask.foreground_fraction();
  if (r.foreground > kLocatedFraction) {
    if (auto box = largest_component_box(r.mask.tensor())) {
      r.crop_box = map_box(*box, l, l, photo.width(), photo.height());
      r.located = true;
    }
  }
  return r;
}

void Watermarker::decode_box(const ImageTensor& photo_in, const CropBox& box, ExtractResult& r) const {
  const auto photo = photo_in.to_rgb();
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > photo.width() || box.y1 > photo.height() || box.width() < 1 ||
      box.height() < 1) {
    throw InputError("crop box outside the photo");
  }
  torch::NoGradGuard guard;
  auto crop = crop_and_resize(photo.batched(), {box}, models_.config.image_size);
  auto pattern = models_.decoder.forward(crop);
  auto scores = models_.extractor.forward(pattern);
  r.crop_box = box;
  r.pattern = Pattern(pattern[0]);
  r.scores = SoftMessage::from_tensor(scores[0]);
  r.message = r.scores->harden();
}

ExtractResult Watermarker::locate(const ImageTensor& photo) const { return run_locator(photo); }

ExtractResult Watermarker::extract(const ImageTensor& photo) const {
  auto r = run_locator(photo);
  if (r.located) decode_box(photo, *r.crop_box, r);
  return r;
}

ExtractResult Watermarker::extract_with_gt_box(const ImageTensor& photo, const CropBox& box) const {
  auto r = run_locator(photo);
  r.located = true;
  decode_box(photo, box, r);
  return r;
}

}  // namespace aparecium::infer
