#include "omniloc/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "omniloc/error.hpp"

namespace omniloc {

RasterImage read_image(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw Error(ErrorCode::kIo, "cannot read image " + path);
  if (m.depth() != CV_8U) throw Error(ErrorCode::kIo, path + ": only 8-bit images are supported");
  if (m.channels() != 1 && m.channels() != 3) {
    m = cv::imread(path, cv::IMREAD_COLOR);
  }
  if (!m.isContinuous()) m = m.clone();
  std::vector<std::uint8_t> data(m.datastart, m.dataend);
  return RasterImage(m.cols, m.rows, m.channels(), std::move(data));
}

void write_image(const std::string& path, const RasterImage& img) {
  const cv::Mat m(img.height(), img.width(), img.channels() == 1 ? CV_8UC1 : CV_8UC3,
                  const_cast<std::uint8_t*>(img.data().data()));
  bool ok = false;
  try {
    ok = cv::imwrite(path, m);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kIo, "cannot write image " + path + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::kIo, "cannot write image " + path);
}

}  // namespace omniloc
