#include <fstream>
#include <sstream>

#include "cdg/imaging.hpp"

namespace cdg {
namespace {

std::filesystem::path withExt(std::filesystem::path stem, const char* ext) {
  if (stem.extension() == ".raw" || stem.extension() == ".hdr") stem.replace_extension();
  stem += ext;
  return stem;
}

}  // namespace

void writeClip(const std::filesystem::path& stem, const std::vector<Frame>& frames, double fps) {
  if (frames.empty()) throw StructuralError("writeClip: no frames");
  const Index w = frames.front().width();
  const Index h = frames.front().height();
  std::ofstream raw(withExt(stem, ".raw"), std::ios::binary);
  if (!raw) throw ConfigError("writeClip: cannot open " + withExt(stem, ".raw").string());
  for (const auto& f : frames) {
    if (f.width() != w || f.height() != h)
      throw StructuralError("writeClip: frames have mixed dimensions");
    raw.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(w * h));
  }
  std::ofstream hdr(withExt(stem, ".hdr"));
  hdr << "width " << w << "\nheight " << h << "\nframes " << frames.size() << "\nfps " << fps
      << "\n";
}

ClipHeader readClipHeader(const std::filesystem::path& hdrPath) {
  std::ifstream in(hdrPath);
  if (!in) throw ConfigError("readClipHeader: cannot open " + hdrPath.string());
  ClipHeader h;
  std::string key;
  while (in >> key) {
    if (key == "width") in >> h.width;
    else if (key == "height") in >> h.height;
    else if (key == "frames") in >> h.frames;
    else if (key == "fps") in >> h.fps;
    else throw ConfigError("readClipHeader: unknown key '" + key + "'");
  }
  if (h.width <= 0 || h.height <= 0 || h.frames < 0)
    throw ConfigError("readClipHeader: invalid dimensions in " + hdrPath.string());
  return h;
}

Clip readClip(const std::filesystem::path& stem) {
  const ClipHeader h = readClipHeader(withExt(stem, ".hdr"));
  std::ifstream raw(withExt(stem, ".raw"), std::ios::binary);
  if (!raw) throw ConfigError("readClip: cannot open " + withExt(stem, ".raw").string());
  Clip clip;
  clip.fps = h.fps;
  clip.frames.reserve(static_cast<std::size_t>(h.frames));
  for (Index i = 0; i < h.frames; ++i) {
    Frame f(h.width, h.height);
    raw.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(h.width * h.height));
    if (raw.gcount() != h.width * h.height)
      throw StructuralError("readClip: raw file shorter than header declares");
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

}  // namespace cdg
