"""
C3DVQA 质量评分服务 API
预测、PSNR 基线与命令列表
"""
from contextlib import asynccontextmanager
from datetime import datetime
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from commands import get_command_manager
from config.logging_config import get_logger, setup_logging

setup_logging(level="INFO", console_output=True)
logger = get_logger(__name__)

API_VERSION = "1.0.0"


# ========== 数据模型 ==========

class VideoPairRequest(BaseModel):
    """参考/失真视频路径（服务端可见的原始Y文件，旁注文件在同目录）"""
    reference: str = Field(..., description="参考视频路径")
    distorted: str = Field(..., description="失真视频路径")


class PredictRequest(VideoPairRequest):
    checkpoint: str = Field(..., description="检查点路径")
    batch_size: Optional[int] = Field(None, ge=1)


class BaseResponse(BaseModel):
    """基础响应模型"""
    success: bool = Field(..., description="请求是否成功")
    data: Optional[Dict[str, Any]] = Field(None, description="返回数据")
    error: Optional[str] = Field(None, description="错误信息")
    execution_time: float = Field(0.0, description="执行耗时（秒）")
    timestamp: str = Field(default_factory=lambda: datetime.now().isoformat())


class CommandsResponse(BaseModel):
    commands: List[Dict[str, Any]]
    statistics: Dict[str, Any]


class HealthResponse(BaseModel):
    """健康检查响应"""
    status: str = Field(default="healthy")
    version: str = Field(default=API_VERSION)
    timestamp: str = Field(default_factory=lambda: datetime.now().isoformat())


# ========== 应用生命周期管理 ==========

@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("🚀 C3DVQA 评分服务启动")
    logger.info("📋 可用接口:")
    logger.info("   POST /api/predict - 视频质量预测")
    logger.info("   POST /api/psnr - PSNR 基线")
    logger.info("   GET /api/commands - 命令列表")
    logger.info("   GET /health - 健康检查")
    yield
    logger.info("🛑 C3DVQA 评分服务关闭")


app = FastAPI(
    title="C3DVQA 质量评分服务",
    description="全参考视频质量评价：C3DVQA 网络预测与 PSNR 基线",
    version=API_VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

command_manager = get_command_manager()


async def _execute(command_name: str, **kwargs) -> BaseResponse:
    result = await command_manager.execute_command(command_name, **kwargs)
    if not result.success:
        logger.error(f"❌ {command_name} 失败: {result.error}")
        raise HTTPException(status_code=500, detail=result.error or f"{command_name} 失败")
    return BaseResponse(success=True, data=result.data, execution_time=result.execution_time)


# ========== 核心接口 ==========

@app.post("/api/predict", response_model=BaseResponse)
async def predict(request: PredictRequest):
    """
    用检查点对一对视频打分

    输出：每个片段的分数、平均阈值与平均掩蔽失真，以及整段平均分数
    """
    logger.info(f"🎬 收到预测请求: {request.distorted}")
    return await _execute("predict", **request.model_dump())


@app.post("/api/psnr", response_model=BaseResponse)
async def psnr(request: VideoPairRequest):
    """PSNR 基线；完全相同的视频返回 psnr=null、identical=true"""
    logger.info(f"📐 收到 PSNR 请求: {request.distorted}")
    return await _execute("psnr", **request.model_dump())


@app.get("/api/commands", response_model=CommandsResponse)
async def list_commands():
    return CommandsResponse(commands=command_manager.list_commands(),
                            statistics=command_manager.get_statistics())


@app.get("/health", response_model=HealthResponse)
async def health_check():
    return HealthResponse(status="healthy")


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main_api:app",
        host="0.0.0.0",
        port=8000,
        reload=True
    )
