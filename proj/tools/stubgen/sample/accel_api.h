// Sample accelerator API used to exercise the stub generator.
#pragma once

/** Integer addition, the smallest possible task. */
int add(int a, int b);

/** Byte copy between two host regions. */
void copy(void* dst, const void* src, size_t n);

/**
 * Element-wise sum of two int32 vectors.
 * @param h_a [in] size(n * sizeof(int32_t))
 * @param h_b [in] size(n * sizeof(int32_t))
 * @param h_out [out] size(n * sizeof(int32_t))
 */
void vec_add_i32(const int32_t* h_a, const int32_t* h_b, int32_t* h_out, size_t n);

/**
 * y = alpha * x + y
 * @param h_x size(n * sizeof(float))
 * @param h_y size(n * sizeof(float))
 */
void saxpy(size_t n, float alpha, const float* h_x, float* h_y);

/**
 * Dot product.
 * @param h_x size(n * sizeof(float))
 * @param h_y size(n * sizeof(float))
 */
float sdot(size_t n, const float* h_x, const float* h_y);

void sscal(float alpha, float* h_x, size_t h_x_count);

/** @param h_buf [out] */
void fill_u8(uint8_t* h_buf, size_t buf_size, uint8_t value);

int64_t sum_i64(const int64_t* h_values, size_t values_len);

void dev_fill_f32(float* d_data, size_t n, float value);

void dev_scale_f32(float* d_data, size_t n, float factor);

/** Reverses a byte string in place. */
void reverse_bytes(uint8_t* buf, size_t len);

double mean_f64(const double* h_v, size_t v_count);

/**
 * C = A * B for row-major A (m x k) and B (k x n).
 * @param h_a size(m * k * sizeof(float))
 * @param h_b size(k * n * sizeof(float))
 * @param h_c [out] size(m * n * sizeof(float))
 */
void matmul_f32(const float* h_a, const float* h_b, float* h_c, int m, int n, int k);

/** Adler-style checksum of a byte range. */
uint32_t checksum_u32(const uint8_t* data, size_t nbytes);

/** @param d_dst [out] */
void dev_copy_f32(float* d_dst, const float* d_src, size_t n);

int acl_init(int flags);

int acl_shutdown(void);

int acl_device_count(void);

int acl_set_device(int device);

int acl_get_device(void);

uint64_t acl_mem_capacity(int device);

uint64_t acl_mem_free(int device);

int acl_device_streams(int device);

int acl_device_kind(int device);

int acl_stream_create(int device, int priority);

int acl_stream_destroy(int stream);

int acl_stream_sync(int stream);

int acl_stream_query(int stream);

int acl_event_create(int flags);

int acl_event_destroy(int event);

int acl_event_record(int event, int stream);

int acl_event_sync(int event);

float acl_event_elapsed_ms(int start, int stop);

int acl_set_flag(int flag, int value);

int acl_get_flag(int flag);

int acl_profiler_start(void);

int acl_profiler_stop(void);

int acl_set_cache_config(int config);

int acl_get_last_error(void);

int acl_peek_last_error(void);

int acl_device_reset(int device);

int acl_device_sync(void);

int acl_set_limit(int limit, size_t value);

size_t acl_get_limit(int limit);

int acl_clock_rate_khz(int device);

int acl_compute_units(int device);

int acl_warp_size(int device);

long acl_timer_ticks(void);

double acl_timer_seconds(long ticks);

int acl_graph_create(int flags);

int acl_graph_launch(int graph, int stream);

int acl_graph_destroy(int graph);

unsigned int acl_version(void);

int acl_driver_version(void);

int acl_runtime_version(void);

int acl_set_priority(int stream, int priority);

int acl_stream_wait_event(int stream, int event, unsigned int flags);

int acl_mem_advise(uint64_t handle, size_t bytes, int advice, int device);

int acl_prefetch(uint64_t handle, size_t bytes, int device, int stream);

bool acl_can_access_peer(int device, int peer);

int acl_enable_peer(int peer, unsigned int flags);

int acl_disable_peer(int peer);

short acl_temperature_c(int device);

unsigned short acl_power_state(int device);

int acl_set_clock(int device, int mhz);

void acl_negate_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_negate_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_negate_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_negate_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_negate_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_negate_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_negate_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

void acl_abs_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_abs_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_abs_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_abs_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_abs_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_abs_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_abs_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

void acl_square_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_square_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_square_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_square_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_square_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_square_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_square_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

void acl_clamp_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count, float lo, float hi);

void acl_clamp_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count, double lo, double hi);

void acl_clamp_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count, int32_t lo, int32_t hi);

void acl_clamp_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count, uint8_t lo, uint8_t hi);

void acl_clamp_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count, int16_t lo, int16_t hi);

void acl_clamp_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count, uint32_t lo, uint32_t hi);

void acl_clamp_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count, int64_t lo, int64_t hi);

void acl_sort_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_sort_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_sort_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_sort_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_sort_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_sort_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_sort_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

void acl_prefix_sum_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_prefix_sum_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_prefix_sum_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_prefix_sum_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_prefix_sum_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_prefix_sum_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_prefix_sum_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

void acl_reverse_f32(const float* h_in, size_t in_count, float* h_out, size_t out_count);

void acl_reverse_f64(const double* h_in, size_t in_count, double* h_out, size_t out_count);

void acl_reverse_i32(const int32_t* h_in, size_t in_count, int32_t* h_out, size_t out_count);

void acl_reverse_u8(const uint8_t* h_in, size_t in_count, uint8_t* h_out, size_t out_count);

void acl_reverse_i16(const int16_t* h_in, size_t in_count, int16_t* h_out, size_t out_count);

void acl_reverse_u32(const uint32_t* h_in, size_t in_count, uint32_t* h_out, size_t out_count);

void acl_reverse_i64(const int64_t* h_in, size_t in_count, int64_t* h_out, size_t out_count);

float acl_max_f32(const float* h_in, size_t in_len);

float acl_min_f32(const float* h_in, size_t in_len);

double acl_max_f64(const double* h_in, size_t in_len);

double acl_min_f64(const double* h_in, size_t in_len);

int32_t acl_max_i32(const int32_t* h_in, size_t in_len);

int32_t acl_min_i32(const int32_t* h_in, size_t in_len);

uint8_t acl_max_u8(const uint8_t* h_in, size_t in_len);

uint8_t acl_min_u8(const uint8_t* h_in, size_t in_len);

int16_t acl_max_i16(const int16_t* h_in, size_t in_len);

int16_t acl_min_i16(const int16_t* h_in, size_t in_len);

uint32_t acl_max_u32(const uint32_t* h_in, size_t in_len);

uint32_t acl_min_u32(const uint32_t* h_in, size_t in_len);

int64_t acl_max_i64(const int64_t* h_in, size_t in_len);

int64_t acl_min_i64(const int64_t* h_in, size_t in_len);

/** @param h_data [out] */
void acl_zero_bytes(void* h_data, size_t data_size);

void acl_xor_mask_bytes(uint8_t* h_data, size_t data_size, uint8_t mask);

uint64_t acl_popcount_bytes(const uint8_t* h_data, size_t data_size);

uint64_t acl_hash64_bytes(const void* h_data, size_t data_size, uint64_t seed);

void acl_dev_clear_f32(float* d_buf, size_t n);

void acl_dev_iota_f32(float* d_buf, size_t n, float start);

void acl_dev_clear_f64(double* d_buf, size_t n);

void acl_dev_iota_f64(double* d_buf, size_t n, double start);

void acl_dev_clear_i32(int32_t* d_buf, size_t n);

void acl_dev_iota_i32(int32_t* d_buf, size_t n, int32_t start);

void acl_dev_clear_u8(uint8_t* d_buf, size_t n);

void acl_dev_iota_u8(uint8_t* d_buf, size_t n, uint8_t start);

void acl_dev_clear_i16(int16_t* d_buf, size_t n);

void acl_dev_iota_i16(int16_t* d_buf, size_t n, int16_t start);

void acl_dev_clear_u32(uint32_t* d_buf, size_t n);

void acl_dev_iota_u32(uint32_t* d_buf, size_t n, uint32_t start);

void acl_dev_clear_i64(int64_t* d_buf, size_t n);

void acl_dev_iota_i64(int64_t* d_buf, size_t n, int64_t start);

/**
 * Blur filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_blur(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Sharpen filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_sharpen(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Sobel filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_sobel(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Threshold filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_threshold(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Invert filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_invert(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Dilate filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_dilate(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Erode filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_erode(const uint8_t* src, uint8_t* dst, int w, int h);

/**
 * Median filter over a w x h single-channel image.
 * @param src [in] [host] size(w * h)
 * @param dst [out] [host] size(w * h)
 */
void acl_img_median(const uint8_t* src, uint8_t* dst, int w, int h);

void acl_add_f32(const float* h_a, size_t a_count, const float* h_b, size_t b_count, float* h_out, size_t out_count);

void acl_add_f64(const double* h_a, size_t a_count, const double* h_b, size_t b_count, double* h_out, size_t out_count);

void acl_add_i32(const int32_t* h_a, size_t a_count, const int32_t* h_b, size_t b_count, int32_t* h_out, size_t out_count);

void acl_add_u8(const uint8_t* h_a, size_t a_count, const uint8_t* h_b, size_t b_count, uint8_t* h_out, size_t out_count);

void acl_add_i16(const int16_t* h_a, size_t a_count, const int16_t* h_b, size_t b_count, int16_t* h_out, size_t out_count);

void acl_add_u32(const uint32_t* h_a, size_t a_count, const uint32_t* h_b, size_t b_count, uint32_t* h_out, size_t out_count);

void acl_add_i64(const int64_t* h_a, size_t a_count, const int64_t* h_b, size_t b_count, int64_t* h_out, size_t out_count);

void acl_sub_f32(const float* h_a, size_t a_count, const float* h_b, size_t b_count, float* h_out, size_t out_count);

void acl_sub_f64(const double* h_a, size_t a_count, const double* h_b, size_t b_count, double* h_out, size_t out_count);

void acl_sub_i32(const int32_t* h_a, size_t a_count, const int32_t* h_b, size_t b_count, int32_t* h_out, size_t out_count);

void acl_sub_u8(const uint8_t* h_a, size_t a_count, const uint8_t* h_b, size_t b_count, uint8_t* h_out, size_t out_count);

void acl_sub_i16(const int16_t* h_a, size_t a_count, const int16_t* h_b, size_t b_count, int16_t* h_out, size_t out_count);

void acl_sub_u32(const uint32_t* h_a, size_t a_count, const uint32_t* h_b, size_t b_count, uint32_t* h_out, size_t out_count);

void acl_sub_i64(const int64_t* h_a, size_t a_count, const int64_t* h_b, size_t b_count, int64_t* h_out, size_t out_count);

void acl_mul_f32(const float* h_a, size_t a_count, const float* h_b, size_t b_count, float* h_out, size_t out_count);

void acl_mul_f64(const double* h_a, size_t a_count, const double* h_b, size_t b_count, double* h_out, size_t out_count);

void acl_mul_i32(const int32_t* h_a, size_t a_count, const int32_t* h_b, size_t b_count, int32_t* h_out, size_t out_count);

void acl_mul_u8(const uint8_t* h_a, size_t a_count, const uint8_t* h_b, size_t b_count, uint8_t* h_out, size_t out_count);

void acl_mul_i16(const int16_t* h_a, size_t a_count, const int16_t* h_b, size_t b_count, int16_t* h_out, size_t out_count);

void acl_mul_u32(const uint32_t* h_a, size_t a_count, const uint32_t* h_b, size_t b_count, uint32_t* h_out, size_t out_count);

void acl_mul_i64(const int64_t* h_a, size_t a_count, const int64_t* h_b, size_t b_count, int64_t* h_out, size_t out_count);

int acl_stream_priority_range(int device);

int acl_device_ordinal(uint64_t uuid_lo, uint64_t uuid_hi);

void acl_sgemv(int m, int n, float alpha, const float* a, const float* x, float beta, float* y);

void acl_dgemv(int m, int n, double alpha, const double* a, const double* x, double beta, double* y);

void acl_sger(int m, int n, float alpha, const float* x, const float* y, float* a);

void acl_memcpy_htod(void* dst, const void* src, size_t bytes);

void acl_memcpy_dtoh(void* dst, const void* src, size_t bytes);

void acl_memcpy_dtod(void* dst, const void* src, size_t bytes);

void acl_memset(void* dst, int value, size_t bytes);

void acl_transpose_f32(const float* in, float* out, int rows, int cols);

void acl_conv1d_f32(const float* signal, int n, const float* taps, int k, float* out);

void acl_histogram_u8(const uint8_t* data, size_t n, uint32_t* bins);

void acl_gather_f32(const float* table, int table_n, const int32_t* idx, int n, float* out);

void acl_scatter_f32(const float* values, const int32_t* idx, int n, float* table, int table_n);

void acl_fft_c2c(float* data, int n, int inverse);

void acl_rng_uniform(float* out, size_t n, uint64_t seed);

void acl_rng_normal(float* out, size_t n, uint64_t seed, float mean, float stddev);

int acl_compare_bytes(const void* a, const void* b, size_t n);

void acl_pack_rgb(const uint8_t* r, const uint8_t* g, const uint8_t* b, uint8_t* rgb, int pixels);

void acl_unpack_rgb(const uint8_t* rgb, uint8_t* r, uint8_t* g, uint8_t* b, int pixels);

void acl_csr_spmv(int rows, int nnz, const int32_t* row_ptr, const int32_t* cols, const float* vals, const float* x, float* y, int ncols);

void acl_stencil5_f32(const float* in, float* out, int nx, int ny);

float acl_norm2_f32(const float* v, int n);

void acl_softmax_f32(float* logits, int n);

void acl_quantize_f32_u8(const float* in, uint8_t* out, int n, float scale);
