#include "melanet/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>

#include "melanet/errors.hpp"

namespace melanet {

ImageTensor decode_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw DataError("image file not found: " + path.string());
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty())
        throw DataError("undecodable image: " + path.string());
    if (mat.channels() == 4)
        cv::cvtColor(mat, mat, cv::COLOR_BGRA2BGR);
    if (mat.depth() != CV_8U)
        mat.convertTo(mat, CV_8U);

    int ch = mat.channels();
    if (ch != 1 && ch != 3)
        throw DataError("unsupported channel count in " + path.string());
    ImageTensor img(mat.rows, mat.cols, ch, RangeTag::raw_0_255);
    for (int y = 0; y < mat.rows; ++y) {
        const uint8_t* row = mat.ptr<uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x) {
            if (ch == 1) {
                img.at(y, x, 0) = static_cast<float>(row[x]);
            } else {
                // OpenCV stores BGR
                img.at(y, x, 0) = static_cast<float>(row[x * 3 + 2]);
                img.at(y, x, 1) = static_cast<float>(row[x * 3 + 1]);
                img.at(y, x, 2) = static_cast<float>(row[x * 3 + 0]);
            }
        }
    }
    return img;
}

ImageTensor quantize_to_raw(const ImageTensor& image) {
    ImageTensor out = image;
    switch (image.range_tag) {
        case RangeTag::raw_0_255:
            break;
        case RangeTag::standardized_0_1:
            for (float& v : out.values) v *= 255.0f;
            break;
        case RangeTag::tanh_m1_1:
            for (float& v : out.values) v = (v + 1.0f) * 127.5f;
            break;
    }
    out.range_tag = RangeTag::raw_0_255;
    for (float& v : out.values)
        v = std::round(std::clamp(v, 0.0f, 255.0f));
    return out;
}

void encode_png(const ImageTensor& image, const std::filesystem::path& path) {
    if (image.range_tag != RangeTag::raw_0_255)
        throw DataError("encode_png: expected raw_0_255 pixels");
    int ch = image.channels;
    cv::Mat mat(image.height, image.width, ch == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        uint8_t* row = mat.ptr<uint8_t>(y);
        for (int x = 0; x < image.width; ++x) {
            if (ch == 1) {
                row[x] = static_cast<uint8_t>(std::clamp(std::lround(image.at(y, x, 0)), 0L, 255L));
            } else {
                row[x * 3 + 2] = static_cast<uint8_t>(std::clamp(std::lround(image.at(y, x, 0)), 0L, 255L));
                row[x * 3 + 1] = static_cast<uint8_t>(std::clamp(std::lround(image.at(y, x, 1)), 0L, 255L));
                row[x * 3 + 0] = static_cast<uint8_t>(std::clamp(std::lround(image.at(y, x, 2)), 0L, 255L));
            }
        }
    }
    std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), mat))
        throw DataError("failed to write PNG: " + path.string());
}

}  // namespace melanet
