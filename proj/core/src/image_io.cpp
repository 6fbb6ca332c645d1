#include "dermx/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dermx/errors.hpp"

namespace dermx {

namespace {

Image from_bgr(const cv::Mat& bgr, const std::string& what) {
    if (bgr.empty()) throw IoError("failed to decode image: " + what);
    cv::Mat rgb;
    if (bgr.channels() == 3) {
        cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    } else if (bgr.channels() == 1) {
        cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
    } else {
        throw IoError("unsupported channel count in " + what);
    }
    Image out(rgb.rows, rgb.cols);
    for (int y = 0; y < rgb.rows; ++y) {
        const uint8_t* row = rgb.ptr<uint8_t>(y);
        std::copy(row, row + static_cast<size_t>(rgb.cols) * 3,
                  out.bytes().begin() + static_cast<size_t>(y) * rgb.cols * 3);
    }
    return out;
}

cv::Mat to_bgr(const Image& img) {
    cv::Mat rgb(img.height(), img.width(), CV_8UC3, const_cast<uint8_t*>(img.bytes().data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

Mask from_gray(const cv::Mat& m, const std::string& what) {
    if (m.empty()) throw IoError("failed to decode mask: " + what);
    cv::Mat gray;
    if (m.channels() == 1) gray = m;
    else cv::cvtColor(m, gray, cv::COLOR_BGR2GRAY);
    Mask out(gray.rows, gray.cols);
    for (int y = 0; y < gray.rows; ++y) {
        const uint8_t* row = gray.ptr<uint8_t>(y);
        for (int x = 0; x < gray.cols; ++x) out.at(y, x) = row[x] ? 1 : 0;
    }
    return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    return from_bgr(bgr, path.string());
}

void write_image_png(const std::filesystem::path& path, const Image& img) {
    if (!cv::imwrite(path.string(), to_bgr(img)))
        throw IoError("failed to write image " + path.string());
}

Mask read_mask(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    return from_gray(m, path.string());
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) gray.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    if (!cv::imwrite(path.string(), gray))
        throw IoError("failed to write mask " + path.string());
}

std::vector<uint8_t> encode_png(const Image& img) {
    std::vector<uint8_t> buf;
    if (!cv::imencode(".png", to_bgr(img), buf)) throw IoError("png encode failed");
    return buf;
}

Image decode_image(const std::vector<uint8_t>& bytes) {
    cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
    return from_bgr(bgr, "<memory>");
}

std::vector<uint8_t> encode_mask_png(const Mask& mask) {
    cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) gray.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    std::vector<uint8_t> buf;
    if (!cv::imencode(".png", gray, buf)) throw IoError("png encode failed");
    return buf;
}

Mask decode_mask(const std::vector<uint8_t>& bytes) {
    cv::Mat m = cv::imdecode(bytes, cv::IMREAD_GRAYSCALE);
    return from_gray(m, "<memory>");
}

}  // namespace dermx
